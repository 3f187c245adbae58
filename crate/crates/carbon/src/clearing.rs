//! Market clearing: per-period bid-cost-minimizing LP over generator
//! dispatch, with a single power-balance row and two-sided inequality rows
//! for PTDF line flows and generator capacities. Periods are decoupled and
//! solved block-by-block.

use crate::error::{CarbonError, Result};
use crate::grid::{CaseData, PtdfMatrix};
use crate::linalg::Mat;
use crate::simplex::{self, StandardLp};

/// Relative binding tolerance: a row is binding when its slack is below
/// `BINDING_TOL * max(1, |bound|)`.
pub const BINDING_TOL: f64 = 1e-7;
pub const KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// PTDF line-flow row (line index); bounds move with the nodal loads.
    Line(usize),
    /// Generator capacity row (generator index); bound sensitivity zero.
    Capacity(usize),
}

#[derive(Debug, Clone)]
pub struct IneqRow {
    pub kind: RowKind,
    /// Coefficients over the dispatch variables.
    pub coeffs: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

/// One period's block of the clearing LP.
#[derive(Debug, Clone)]
pub struct PeriodProblem {
    pub period: usize,
    pub cost: Vec<f64>,
    /// Balance rhs: total demand this period.
    pub balance_rhs: f64,
    pub rows: Vec<IneqRow>,
    /// d(upper bound)/d(nodal load), rows x buses.
    pub du_db: Mat,
    /// d(lower bound)/d(nodal load); equals `du_db` on line rows.
    pub dv_db: Mat,
}

#[derive(Debug, Clone)]
pub struct ClearingProblem {
    pub n_gens: usize,
    pub n_buses: usize,
    pub periods: Vec<PeriodProblem>,
}

#[derive(Debug, Clone)]
pub struct PeriodSolution {
    pub x: Vec<f64>,
    pub pi: f64,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub binding_upper: Vec<bool>,
    pub binding_lower: Vec<bool>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct ClearingSolution {
    pub periods: Vec<PeriodSolution>,
    pub objective: f64,
}

impl ClearingSolution {
    /// Binding-set signature over all periods, used for breakpoint
    /// detection along the load-scaling ray.
    pub fn binding_signature(&self) -> Vec<bool> {
        let mut sig = Vec::new();
        for p in &self.periods {
            sig.extend_from_slice(&p.binding_upper);
            sig.extend_from_slice(&p.binding_lower);
        }
        sig
    }

    /// Binding signature recomputed from the stored slacks with an
    /// explicit tolerance. The breakpoint scan uses a tighter threshold
    /// than [`BINDING_TOL`]: a binding row's slack is exactly zero at an
    /// LP vertex, and a loose threshold biases the located flip point by
    /// tol / (slack slope along the ray).
    pub fn binding_signature_tol(&self, prob: &ClearingProblem, tol: f64) -> Vec<bool> {
        let mut sig = Vec::new();
        for (p, pp) in self.periods.iter().zip(&prob.periods) {
            for (r, row) in pp.rows.iter().enumerate() {
                sig.push(p.w1[r] < tol * row.upper.abs().max(1.0));
            }
            for (r, row) in pp.rows.iter().enumerate() {
                sig.push(p.w2[r] < tol * row.lower.abs().max(1.0));
            }
        }
        sig
    }
}

/// Assemble the clearing LP for the given per-period nodal loads
/// (`loads[t][bus_idx]`, MW).
pub fn assemble_clearing_lp(
    case: &CaseData,
    ptdf: &PtdfMatrix,
    loads: &[Vec<f64>],
) -> Result<ClearingProblem> {
    let n = case.generators.len();
    let nb = case.n_buses();
    if loads.iter().any(|d| d.len() != nb) {
        return Err(CarbonError::Validation(
            "load vector length does not match bus count".into(),
        ));
    }
    let cost: Vec<f64> = case.generators.iter().map(|g| g.bid_per_mwh).collect();

    // generator incidence: line-row coefficient on gen j is the PTDF entry
    // at the generator's bus
    let gen_bus: Vec<usize> = case
        .generators
        .iter()
        .map(|g| case.bus_index(g.bus).expect("validated"))
        .collect();

    let mut periods = Vec::with_capacity(loads.len());
    for (t, d) in loads.iter().enumerate() {
        let mut rows = Vec::new();
        let n_rows = case.lines.len() + n;
        let mut du_db = Mat::zeros(n_rows, nb);
        let mut dv_db = Mat::zeros(n_rows, nb);
        for (li, line) in case.lines.iter().enumerate() {
            let coeffs: Vec<f64> = gen_bus.iter().map(|&b| ptdf.entry(li, b)).collect();
            let shift: f64 = (0..nb).map(|b| ptdf.entry(li, b) * d[b]).sum();
            rows.push(IneqRow {
                kind: RowKind::Line(li),
                coeffs,
                lower: -line.capacity_mw + shift,
                upper: line.capacity_mw + shift,
            });
            for b in 0..nb {
                du_db[(li, b)] = ptdf.entry(li, b);
                dv_db[(li, b)] = ptdf.entry(li, b);
            }
        }
        for (gi, g) in case.generators.iter().enumerate() {
            let mut coeffs = vec![0.0; n];
            coeffs[gi] = 1.0;
            rows.push(IneqRow {
                kind: RowKind::Capacity(gi),
                coeffs,
                lower: 0.0,
                upper: g.pmax_mw,
            });
        }
        periods.push(PeriodProblem {
            period: t,
            cost: cost.clone(),
            balance_rhs: d.iter().sum(),
            rows,
            du_db,
            dv_db,
        });
    }
    Ok(ClearingProblem {
        n_gens: n,
        n_buses: nb,
        periods,
    })
}

/// Solve every period of the clearing LP with the bundled simplex and
/// extract the complete dual/slack record.
pub fn solve_lp(problem: &ClearingProblem) -> Result<ClearingSolution> {
    let mut periods = Vec::with_capacity(problem.periods.len());
    let mut objective = 0.0;
    for p in &problem.periods {
        let sol = solve_period(problem.n_gens, p)?;
        objective += sol.objective;
        periods.push(sol);
    }
    Ok(ClearingSolution { periods, objective })
}

fn solve_period(n: usize, p: &PeriodProblem) -> Result<PeriodSolution> {
    let m = p.rows.len();
    // standard form: variables [x, (w1_r, w2_r) per row], all >= 0
    // row 0: balance; rows 1+2r / 2+2r: upper/lower forms of ineq row r
    let n_rows = 1 + 2 * m;
    let n_cols = n + 2 * m;
    let mut a = Mat::zeros(n_rows, n_cols);
    let mut b = vec![0.0; n_rows];
    let mut c = vec![0.0; n_cols];
    c[..n].copy_from_slice(&p.cost);
    for j in 0..n {
        a[(0, j)] = 1.0;
    }
    b[0] = p.balance_rhs;
    for (r, row) in p.rows.iter().enumerate() {
        let up = 1 + 2 * r;
        let lo = 2 + 2 * r;
        for j in 0..n {
            a[(up, j)] = row.coeffs[j];
            a[(lo, j)] = row.coeffs[j];
        }
        a[(up, n + 2 * r)] = 1.0; // + w1 = upper
        a[(lo, n + 2 * r + 1)] = -1.0; // - w2 = lower
        b[up] = row.upper;
        b[lo] = row.lower;
    }
    let lp = StandardLp { a, b, c };
    let s = simplex::solve(&lp)?;

    let x: Vec<f64> = s.x[..n].to_vec();
    let mut w1 = vec![0.0; m];
    let mut w2 = vec![0.0; m];
    let mut psi = vec![0.0; m];
    let mut phi = vec![0.0; m];
    for r in 0..m {
        w1[r] = s.x[n + 2 * r].max(0.0);
        w2[r] = s.x[n + 2 * r + 1].max(0.0);
        psi[r] = (-s.y[1 + 2 * r]).max(0.0);
        phi[r] = s.y[2 + 2 * r].max(0.0);
    }
    let pi = s.y[0];
    // a dispatch variable stuck at zero can leave its bound multiplier in
    // the reduced cost; move it onto the generator's capacity-lower row so
    // stationarity holds in the row formulation
    for j in 0..n {
        let d = s.reduced_costs[j];
        if d > 0.0 {
            let cap = p
                .rows
                .iter()
                .position(|r| r.kind == RowKind::Capacity(j))
                .expect("capacity row exists");
            phi[cap] += d;
        }
    }

    let binding_upper: Vec<bool> = (0..m)
        .map(|r| w1[r] < BINDING_TOL * p.rows[r].upper.abs().max(1.0))
        .collect();
    let binding_lower: Vec<bool> = (0..m)
        .map(|r| w2[r] < BINDING_TOL * p.rows[r].lower.abs().max(1.0))
        .collect();

    let sol = PeriodSolution {
        x,
        pi,
        psi,
        phi,
        w1,
        w2,
        binding_upper,
        binding_lower,
        objective: s.objective,
    };
    debug_assert!(kkt_residual(p, &sol) <= 1e-7, "KKT residual too large");
    Ok(sol)
}

/// Infinity-norm residual of the KKT conditions at a candidate solution:
/// stationarity, primal feasibility, and complementary slackness.
pub fn kkt_residual(p: &PeriodProblem, s: &PeriodSolution) -> f64 {
    let n = s.x.len();
    let m = p.rows.len();
    let mut res: f64 = 0.0;
    // stationarity: c = A'pi - B'psi + B'phi
    for j in 0..n {
        let mut v = s.pi;
        for r in 0..m {
            v -= p.rows[r].coeffs[j] * s.psi[r];
            v += p.rows[r].coeffs[j] * s.phi[r];
        }
        res = res.max((p.cost[j] - v).abs());
    }
    // balance
    let total: f64 = s.x.iter().sum();
    res = res.max((total - p.balance_rhs).abs());
    // slack definitions and complementarity
    for r in 0..m {
        let bx: f64 = p.rows[r].coeffs.iter().zip(&s.x).map(|(a, x)| a * x).sum();
        res = res.max((p.rows[r].upper - bx - s.w1[r]).abs());
        res = res.max((bx - p.rows[r].lower - s.w2[r]).abs());
        res = res.max((s.psi[r] * s.w1[r]).abs() / (1.0 + s.psi[r].abs()));
        res = res.max((s.phi[r] * s.w2[r]).abs() / (1.0 + s.phi[r].abs()));
    }
    res
}

/// Convenience wrapper: assemble and solve at the case's own loads.
pub fn clear_case(case: &CaseData, ptdf: &PtdfMatrix) -> Result<(ClearingProblem, ClearingSolution)> {
    let loads = case.load_matrix();
    let problem = assemble_clearing_lp(case, ptdf, &loads)?;
    let solution = solve_lp(&problem)?;
    Ok((problem, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_ptdf, builtin_case, Bus, CaseData, Generator, LoadProfile};

    fn paper3() -> (CaseData, PtdfMatrix) {
        let c = builtin_case("paper-3bus").unwrap();
        let p = build_ptdf(&c).unwrap();
        (c, p)
    }

    #[test]
    fn assemble_row_structure() {
        let (c, ptdf) = paper3();
        let prob = assemble_clearing_lp(&c, &ptdf, &c.load_matrix()).unwrap();
        assert_eq!(prob.periods.len(), 1);
        let p = &prob.periods[0];
        assert_eq!(p.rows.len(), 5, "3 line rows + 2 capacity rows");
        assert!((p.balance_rhs - 160.0).abs() < 1e-12);
        // line 2-3 upper bound: 25 + (0.5*10 - 0.25*150) = -7.5
        let l23 = &p.rows[2];
        assert!((l23.upper - (-7.5)).abs() < 1e-10);
        assert!((l23.lower - (-57.5)).abs() < 1e-10);
        // line rows have du/db = dv/db
        for r in 0..3 {
            for b in 0..3 {
                assert_eq!(p.du_db[(r, b)], p.dv_db[(r, b)]);
            }
        }
        // capacity rows have zero bound sensitivity
        for r in 3..5 {
            for b in 0..3 {
                assert_eq!(p.du_db[(r, b)], 0.0);
            }
        }
    }

    #[test]
    fn zero_loads_symmetric_bounds() {
        let (c, ptdf) = paper3();
        let prob = assemble_clearing_lp(&c, &ptdf, &[vec![0.0; 3]]).unwrap();
        let p = &prob.periods[0];
        for (r, line) in c.lines.iter().enumerate() {
            assert_eq!(p.rows[r].upper, line.capacity_mw);
            assert_eq!(p.rows[r].lower, -line.capacity_mw);
        }
    }

    #[test]
    fn paper_3bus_base_clearing() {
        let (c, ptdf) = paper3();
        let (prob, sol) = clear_case(&c, &ptdf).unwrap();
        let p = &sol.periods[0];
        assert!((p.x[0] - 130.0).abs() < 1e-8, "G1 = 130");
        assert!((p.x[1] - 30.0).abs() < 1e-8, "G3 = 30");
        assert!((sol.objective - 2200.0).abs() < 1e-8);
        // line 2-3 upper binding with positive multiplier
        assert!(p.binding_upper[2]);
        assert!(p.psi[2] > 1.0, "psi_23 = {}", p.psi[2]);
        assert!((p.psi[2] - 80.0).abs() < 1e-8);
        assert!(kkt_residual(&prob.periods[0], p) <= KKT_TOL);
    }

    #[test]
    fn strong_duality_on_clearing() {
        let (c, ptdf) = paper3();
        let (prob, sol) = clear_case(&c, &ptdf).unwrap();
        let p = &sol.periods[0];
        let blk = &prob.periods[0];
        // dual objective: pi*b - sum psi*u + sum phi*v
        let mut dual = p.pi * blk.balance_rhs;
        for r in 0..blk.rows.len() {
            dual -= p.psi[r] * blk.rows[r].upper;
            dual += p.phi[r] * blk.rows[r].lower;
        }
        assert!((dual - p.objective).abs() < 1e-8);
    }

    #[test]
    fn single_bus_zero_load() {
        let c = CaseData {
            name: "1bus".into(),
            periods: 1,
            slack_bus: 1,
            buses: vec![Bus { id: 1 }],
            lines: vec![],
            generators: vec![Generator {
                id: "G".into(),
                bus: 1,
                pmax_mw: 50.0,
                bid_per_mwh: 20.0,
                emission_t_per_mwh: 0.5,
            }],
            loads: vec![LoadProfile {
                bus: 1,
                mw: vec![0.0],
            }],
        };
        let ptdf = build_ptdf(&c).unwrap();
        let (_, sol) = clear_case(&c, &ptdf).unwrap();
        assert_eq!(sol.periods[0].x[0], 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn dispatch_invariant_to_slack_relabel() {
        let (c, _) = paper3();
        let mut c2 = c.clone();
        c2.slack_bus = 2;
        let s1 = clear_case(&c, &build_ptdf(&c).unwrap()).unwrap().1;
        let s2 = clear_case(&c2, &build_ptdf(&c2).unwrap()).unwrap().1;
        for (a, b) in s1.periods[0].x.iter().zip(&s2.periods[0].x) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn infeasible_line_limit_reported() {
        let (mut c, _) = paper3();
        // choke every line so the bus-3 load cannot be served
        for l in &mut c.lines {
            l.capacity_mw = 1.0;
        }
        let ptdf = build_ptdf(&c).unwrap();
        let prob = assemble_clearing_lp(&c, &ptdf, &c.load_matrix()).unwrap();
        assert!(matches!(solve_lp(&prob), Err(CarbonError::Infeasible(_))));
    }
}
