//! Verification oracles that stay independent of the KKT sensitivity path:
//! a central-difference dispatch sensitivity built on full LP re-solves,
//! and a brute-force active-set QP solver for desk-scale quadratic-cost
//! checks.

use crate::clearing::{assemble_clearing_lp, solve_lp, PeriodProblem, PeriodSolution};
use crate::error::{CarbonError, Result};
use crate::grid::{CaseData, PtdfMatrix};
use crate::linalg::{solve_dense, Mat};

/// Default perturbation step (MW); far below breakpoint spacing and far
/// above solver tolerance.
pub const DEFAULT_FD_EPS: f64 = 1e-4;

/// Central-difference dispatch sensitivity to a nodal load perturbation:
/// `[x(b + eps e) - x(b - eps e)] / (2 eps)` from two full LP re-solves.
///
/// Errors with `BreakpointStraddled` when the two solves land in different
/// binding sets, i.e. the base point sits at (or within `eps` of) a
/// critical-region boundary.
pub fn finite_diff_sensitivity(
    case: &CaseData,
    ptdf: &PtdfMatrix,
    loads: &[Vec<f64>],
    bus_idx: usize,
    period: usize,
    eps: f64,
) -> Result<Vec<f64>> {
    if bus_idx >= case.n_buses() || period >= loads.len() {
        return Err(CarbonError::Validation(format!(
            "unknown bus index {bus_idx} or period {period}"
        )));
    }
    let solve_at = |delta: f64| -> Result<_> {
        let mut perturbed = loads.to_vec();
        perturbed[period][bus_idx] += delta;
        let prob = assemble_clearing_lp(case, ptdf, &perturbed)?;
        let sol = solve_lp(&prob)?;
        Ok(sol)
    };
    let plus = solve_at(eps)?;
    let minus = solve_at(-eps)?;
    if plus.binding_signature() != minus.binding_signature() {
        return Err(CarbonError::BreakpointStraddled);
    }
    Ok(plus.periods[period]
        .x
        .iter()
        .zip(&minus.periods[period].x)
        .map(|(p, m)| (p - m) / (2.0 * eps))
        .collect())
}

/// Brute-force QP solver by enumeration over active sets of the two-sided
/// inequality rows: `min (1/2) x'Qx + c'x  s.t.  1'x = b, v <= Bx <= u`.
///
/// Intended as a desk-scale test utility (the enumeration is 3^m); returns
/// a `PeriodSolution` with the full multiplier record so the sensitivity
/// assembly can consume it.
pub fn solve_qp_active_set(q: &Mat, p: &PeriodProblem) -> Result<PeriodSolution> {
    let n = p.cost.len();
    let m = p.rows.len();
    assert!(m <= 12, "active-set enumeration is for small problems");
    let mut best: Option<(f64, PeriodSolution)> = None;

    // states per row: 0 inactive, 1 at upper, 2 at lower
    let combos = 3usize.pow(m as u32);
    'combo: for code in 0..combos {
        let mut states = vec![0u8; m];
        let mut rem = code;
        for s in states.iter_mut() {
            *s = (rem % 3) as u8;
            rem /= 3;
        }
        let active: Vec<usize> = (0..m).filter(|&r| states[r] != 0).collect();
        let k = active.len();
        let dim = n + 1 + k;
        // unknowns: x, pi, multiplier per active row (psi if at upper,
        // phi if at lower)
        let mut a = Mat::zeros(dim, dim);
        let mut rhs = vec![0.0; dim];
        // stationarity: Qx + c - pi*1 + sum_u psi B_r - sum_l phi B_r = 0
        for j in 0..n {
            for jj in 0..n {
                a[(j, jj)] = q[(j, jj)];
            }
            a[(j, n)] = -1.0;
            for (ki, &r) in active.iter().enumerate() {
                let sign = if states[r] == 1 { 1.0 } else { -1.0 };
                a[(j, n + 1 + ki)] = sign * p.rows[r].coeffs[j];
            }
            rhs[j] = -p.cost[j];
        }
        // balance
        for j in 0..n {
            a[(n, j)] = 1.0;
        }
        rhs[n] = p.balance_rhs;
        // active rows pinned at their bound
        for (ki, &r) in active.iter().enumerate() {
            for j in 0..n {
                a[(n + 1 + ki, j)] = p.rows[r].coeffs[j];
            }
            rhs[n + 1 + ki] = if states[r] == 1 {
                p.rows[r].upper
            } else {
                p.rows[r].lower
            };
        }
        let Some(z) = solve_dense(&a, &rhs) else {
            continue;
        };
        let x = &z[..n];
        let pi = z[n];
        let mut psi = vec![0.0; m];
        let mut phi = vec![0.0; m];
        for (ki, &r) in active.iter().enumerate() {
            let mult = z[n + 1 + ki];
            if mult < -1e-9 {
                continue 'combo;
            }
            if states[r] == 1 {
                psi[r] = mult.max(0.0);
            } else {
                phi[r] = mult.max(0.0);
            }
        }
        let mut w1 = vec![0.0; m];
        let mut w2 = vec![0.0; m];
        for r in 0..m {
            let bx: f64 = p.rows[r].coeffs.iter().zip(x).map(|(a, x)| a * x).sum();
            w1[r] = p.rows[r].upper - bx;
            w2[r] = bx - p.rows[r].lower;
            if w1[r] < -1e-9 || w2[r] < -1e-9 {
                continue 'combo;
            }
            w1[r] = w1[r].max(0.0);
            w2[r] = w2[r].max(0.0);
        }
        let obj: f64 = {
            let qx = q.mul_vec(x);
            0.5 * x.iter().zip(&qx).map(|(a, b)| a * b).sum::<f64>()
                + p.cost.iter().zip(x).map(|(c, x)| c * x).sum::<f64>()
        };
        let binding_upper: Vec<bool> = (0..m)
            .map(|r| w1[r] < 1e-7 * p.rows[r].upper.abs().max(1.0))
            .collect();
        let binding_lower: Vec<bool> = (0..m)
            .map(|r| w2[r] < 1e-7 * p.rows[r].lower.abs().max(1.0))
            .collect();
        let cand = PeriodSolution {
            x: x.to_vec(),
            pi,
            psi,
            phi,
            w1,
            w2,
            binding_upper,
            binding_lower,
            objective: obj,
        };
        match &best {
            Some((bobj, _)) if *bobj <= obj + 1e-12 => {}
            _ => best = Some((obj, cand)),
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| CarbonError::Infeasible("no feasible active set found".into()))
}
