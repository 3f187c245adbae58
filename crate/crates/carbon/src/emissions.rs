//! Emission metrics on top of the clearing and sensitivity machinery:
//! total system emission, locational marginal carbon emission (LMCE) with
//! its energy/network decomposition, and the locational average carbon
//! emission (LACE) computed either by breakpoint scanning along the load
//! ray or by a midpoint Riemann sum.

use crate::clearing::{assemble_clearing_lp, solve_lp, ClearingSolution};
use crate::error::{CarbonError, Result};
use crate::grid::{CaseData, PtdfMatrix};
use crate::kkt::{assemble_kkt_lp, solve_block_columns, solve_sensitivity, SensitivityResult};

/// Per-generator emission coefficients (tCO2/MWh), aligned to the
/// dispatch vector.
#[derive(Debug, Clone)]
pub struct EmissionVector {
    pub k: Vec<f64>,
}

impl EmissionVector {
    pub fn from_case(case: &CaseData) -> Self {
        EmissionVector {
            k: case
                .generators
                .iter()
                .map(|g| g.emission_t_per_mwh)
                .collect(),
        }
    }
}

/// Total emission `K'x` (tCO2) for one period's dispatch.
pub fn total_emission(k: &EmissionVector, x: &[f64]) -> f64 {
    assert_eq!(k.k.len(), x.len(), "dimension mismatch");
    k.k.iter().zip(x).map(|(k, x)| k * x).sum()
}

/// Total emission summed over all periods of a clearing solution.
pub fn total_emission_all(k: &EmissionVector, sol: &ClearingSolution) -> f64 {
    sol.periods.iter().map(|p| total_emission(k, &p.x)).sum()
}

/// LMCE values per `[period][bus]` (tCO2/MWh); decomposition parts are
/// present when produced by [`decompose_lmce`].
#[derive(Debug, Clone)]
pub struct LmceResult {
    pub value: Vec<Vec<f64>>,
    pub energy_part: Option<Vec<Vec<f64>>>,
    pub network_part: Option<Vec<Vec<f64>>>,
}

/// `rho_LMCE[t][i] = K' . dx/db(i, t)`.
pub fn compute_lmce(k: &EmissionVector, sens: &SensitivityResult) -> LmceResult {
    let value = (0..sens.dx_db.len())
        .map(|t| {
            (0..sens.n_buses)
                .map(|b| {
                    sens.dx_db[t]
                        .col(b)
                        .iter()
                        .zip(&k.k)
                        .map(|(dx, k)| dx * k)
                        .sum()
                })
                .collect()
        })
        .collect();
    LmceResult {
        value,
        energy_part: None,
        network_part: None,
    }
}

/// LMCE with its energy/network split: the energy part answers the
/// balance-only right-hand side `[1; 0; 0; 0]`, the network part answers
/// the bound-sensitivity terms, and both come from the same factorization
/// of H so the parts sum to the value to machine precision.
pub fn decompose_lmce(
    k: &EmissionVector,
    sys: &crate::kkt::KktSystem,
    svd_tol: f64,
) -> LmceResult {
    let mut value = Vec::new();
    let mut energy = Vec::new();
    let mut network = Vec::new();
    for block in &sys.blocks {
        let dim = block.h.nrows();
        let nb = block.rhs.ncols();
        // columns: [energy, total per bus..., network per bus...]
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(1 + 2 * nb);
        let mut e_col = vec![0.0; dim];
        e_col[0] = 1.0;
        cols.push(e_col.clone());
        for b in 0..nb {
            cols.push(block.rhs.col(b));
        }
        for b in 0..nb {
            let mut net: Vec<f64> = block.rhs.col(b);
            net[0] = 0.0;
            cols.push(net);
        }
        let (sols, _) = solve_block_columns(block, &cols, svd_tol);
        let kdot = |dz: &Vec<f64>| -> f64 {
            block
                .index
                .x
                .clone()
                .enumerate()
                .map(|(j, i)| k.k[j] * dz[i])
                .sum()
        };
        let e_val = kdot(&sols[0]);
        value.push((0..nb).map(|b| kdot(&sols[1 + b])).collect());
        network.push((0..nb).map(|b| kdot(&sols[1 + nb + b])).collect());
        energy.push(vec![e_val; nb]);
    }
    LmceResult {
        value,
        energy_part: Some(energy),
        network_part: Some(network),
    }
}

/// End-to-end LMCE at a given load point: clear, assemble the KKT system,
/// solve the sensitivities, and contract with the emission vector.
pub fn lmce_at(
    case: &CaseData,
    ptdf: &PtdfMatrix,
    loads: &[Vec<f64>],
    svd_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let prob = assemble_clearing_lp(case, ptdf, loads)?;
    let sol = solve_lp(&prob)?;
    let sys = assemble_kkt_lp(&prob, &sol)?;
    let sens = solve_sensitivity(&sys, svd_tol);
    Ok(compute_lmce(&EmissionVector::from_case(case), &sens).value)
}

pub const DEFAULT_SIGMA_SEEDS: usize = 64;
pub const DEFAULT_SIGMA_TOL: f64 = 1e-7;
pub const BREAKPOINT_CAP: usize = 64;
/// Binding threshold used only while scanning for breakpoints; see
/// [`ClearingSolution::binding_signature_tol`].
const SCAN_BINDING_TOL: f64 = 1e-9;

/// Locate the load-scale values `sigma` in (0, 1) where the optimal
/// binding set changes along `b = sigma * b_star`, by bisection between
/// seed-grid points with differing binding signatures. Endpoints 0 and 1
/// are appended.
pub fn find_breakpoints(
    case: &CaseData,
    ptdf: &PtdfMatrix,
    loads: &[Vec<f64>],
    tol_sigma: f64,
    seed_points: usize,
) -> Result<Vec<f64>> {
    let signature = |sigma: f64| -> Result<Vec<bool>> {
        let scaled: Vec<Vec<f64>> = loads
            .iter()
            .map(|d| d.iter().map(|x| x * sigma).collect())
            .collect();
        let prob = assemble_clearing_lp(case, ptdf, &scaled)?;
        let sol = solve_lp(&prob)?;
        Ok(sol.binding_signature_tol(&prob, SCAN_BINDING_TOL))
    };
    // sigma = 0 itself is degenerate (every unit at its lower bound), so
    // the scan starts just inside the ray
    let lo_edge = 1e-6;
    let seeds = seed_points.max(2);
    let mut grid: Vec<f64> = vec![lo_edge];
    grid.extend((1..=seeds).map(|j| j as f64 / seeds as f64));
    let sigs: Vec<Vec<bool>> = grid
        .iter()
        .map(|&s| signature(s))
        .collect::<Result<_>>()?;

    // recursive subdivision: a cell whose endpoint signatures differ may
    // hide several changes (different periods crossing their own
    // breakpoints), so split until each change is isolated to tol_sigma
    let mut breakpoints = Vec::new();
    let mut stack: Vec<(f64, Vec<bool>, f64, Vec<bool>)> = Vec::new();
    for w in (0..grid.len() - 1).rev() {
        if sigs[w] != sigs[w + 1] {
            stack.push((grid[w], sigs[w].clone(), grid[w + 1], sigs[w + 1].clone()));
        }
    }
    while let Some((lo, lo_sig, hi, hi_sig)) = stack.pop() {
        if hi - lo <= tol_sigma {
            // the change is isolated; polish its location so segment
            // weights (and hence allocation totals) are accurate well
            // beyond tol_sigma
            let (mut lo, mut hi) = (lo, hi);
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if signature(mid)? == lo_sig {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let bp = 0.5 * (lo + hi);
            if bp > tol_sigma && bp < 1.0 - tol_sigma {
                breakpoints.push(bp);
            }
            if breakpoints.len() > BREAKPOINT_CAP {
                return Err(CarbonError::ExcessiveDegeneracy(format!(
                    "more than {BREAKPOINT_CAP} breakpoints along the load ray"
                )));
            }
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let mid_sig = signature(mid)?;
        // right half pushed first so breakpoints come out ascending
        if mid_sig != hi_sig {
            stack.push((mid, mid_sig.clone(), hi, hi_sig));
        }
        if lo_sig != mid_sig {
            stack.push((lo, lo_sig, mid, mid_sig));
        }
    }
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = vec![0.0];
    out.extend(breakpoints);
    out.push(1.0);
    out.dedup_by(|a, b| (*a - *b).abs() <= tol_sigma);
    Ok(out)
}

/// LACE per `[period][bus]` with the supporting breakpoint segments.
#[derive(Debug, Clone)]
pub struct LaceResult {
    pub value: Vec<Vec<f64>>,
    /// Normalized load-scale breakpoints, `0 = y_0 < ... < y_M = 1`.
    pub breakpoints: Vec<f64>,
    /// Per segment: LMCE `[period][bus]` evaluated at the segment midpoint.
    pub segment_lmce: Vec<Vec<Vec<f64>>>,
    /// `value * b_star` (tCO2) per `[period][bus]`.
    pub allocation: Vec<Vec<f64>>,
}

/// LACE by the piecewise-constant segment formula: the breakpoint-weighted
/// sum of segment LMCE values, each evaluated at the segment midpoint.
/// For a zero nodal load the allocation is 0 and the value is still the
/// segment-weighted LMCE (the sigma -> 0+ limit convention).
pub fn compute_lace(
    case: &CaseData,
    ptdf: &PtdfMatrix,
    loads: &[Vec<f64>],
    breakpoints: &[f64],
    svd_tol: f64,
) -> Result<LaceResult> {
    assert!(breakpoints.len() >= 2, "breakpoints must include 0 and 1");
    let nt = loads.len();
    let nb = case.n_buses();
    let mut value = vec![vec![0.0; nb]; nt];
    let mut segment_lmce = Vec::new();
    for w in breakpoints.windows(2) {
        let (y0, y1) = (w[0], w[1]);
        let mid = 0.5 * (y0 + y1);
        let scaled: Vec<Vec<f64>> = loads
            .iter()
            .map(|d| d.iter().map(|x| x * mid).collect())
            .collect();
        let rho = lmce_at(case, ptdf, &scaled, svd_tol)?;
        for t in 0..nt {
            for b in 0..nb {
                value[t][b] += (y1 - y0) * rho[t][b];
            }
        }
        segment_lmce.push(rho);
    }
    let allocation = (0..nt)
        .map(|t| (0..nb).map(|b| value[t][b] * loads[t][b]).collect())
        .collect();
    Ok(LaceResult {
        value,
        breakpoints: breakpoints.to_vec(),
        segment_lmce,
        allocation,
    })
}

/// Independent LACE cross-check: midpoint-rule average of LMCE over a
/// uniform sigma grid with `n_points` cells.
pub fn compute_lace_riemann(
    case: &CaseData,
    ptdf: &PtdfMatrix,
    loads: &[Vec<f64>],
    n_points: usize,
    svd_tol: f64,
) -> Result<LaceResult> {
    assert!(n_points >= 1);
    let nt = loads.len();
    let nb = case.n_buses();
    let mut value = vec![vec![0.0; nb]; nt];
    for k in 0..n_points {
        let sigma = (k as f64 + 0.5) / n_points as f64;
        let scaled: Vec<Vec<f64>> = loads
            .iter()
            .map(|d| d.iter().map(|x| x * sigma).collect())
            .collect();
        let rho = lmce_at(case, ptdf, &scaled, svd_tol)?;
        for t in 0..nt {
            for b in 0..nb {
                value[t][b] += rho[t][b] / n_points as f64;
            }
        }
    }
    let allocation = (0..nt)
        .map(|t| (0..nb).map(|b| value[t][b] * loads[t][b]).collect())
        .collect();
    Ok(LaceResult {
        value,
        breakpoints: vec![0.0, 1.0],
        segment_lmce: Vec::new(),
        allocation,
    })
}

/// Demand-side total vs generation-side total emission.
#[derive(Debug, Clone)]
pub struct ConservationReport {
    pub allocated_total: f64,
    pub actual_total: f64,
    pub relative_gap: f64,
}

pub fn verify_conservation(lace: &LaceResult, actual_total: f64) -> ConservationReport {
    let allocated_total: f64 = lace.allocation.iter().flatten().sum();
    let denom = actual_total.abs().max(1e-9);
    ConservationReport {
        allocated_total,
        actual_total,
        relative_gap: (allocated_total - actual_total).abs() / denom,
    }
}
