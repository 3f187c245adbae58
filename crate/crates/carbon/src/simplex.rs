//! Self-contained dense two-phase primal simplex with Bland's anti-cycling
//! rule, for equality-form problems `min c'x s.t. Ax = b, x >= 0`.
//!
//! Row duals are recovered at the end from the optimal basis by an LU solve
//! of `A_B' y = c_B`, which keeps the pivoting logic and the dual
//! extraction independent of each other.

use crate::error::{CarbonError, Result};
use crate::linalg::{lu_factor, Mat};

const PIVOT_EPS: f64 = 1e-9;
const MAX_ITERS: usize = 20_000;

pub struct StandardLp {
    pub a: Mat,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

pub struct SimplexSolution {
    pub x: Vec<f64>,
    /// Row duals y with c_j - y'A_j >= 0 for all columns.
    pub y: Vec<f64>,
    /// Reduced costs c_j - y'A_j per column.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

pub fn solve(lp: &StandardLp) -> Result<SimplexSolution> {
    let m = lp.a.nrows();
    let n = lp.a.ncols();
    assert_eq!(lp.b.len(), m);
    assert_eq!(lp.c.len(), n);

    // tableau columns: n structural + m artificial + rhs
    let total = n + m;
    let mut t = Mat::zeros(m, total + 1);
    for r in 0..m {
        let flip = if lp.b[r] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..n {
            t[(r, c)] = flip * lp.a[(r, c)];
        }
        t[(r, n + r)] = 1.0;
        t[(r, total)] = flip * lp.b[r];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // phase 1: minimize the sum of artificials
    let phase1_cost: Vec<f64> = (0..total)
        .map(|j| if j >= n { 1.0 } else { 0.0 })
        .collect();
    run_phase(&mut t, &mut basis, &phase1_cost, n, true)?;
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n)
        .map(|(r, _)| t[(r, total)])
        .sum();
    if infeas > 1e-7 {
        let row = basis
            .iter()
            .enumerate()
            .filter(|(_, &j)| j >= n)
            .max_by(|a, b| t[(a.0, total)].partial_cmp(&t[(b.0, total)]).unwrap())
            .map(|(r, _)| r)
            .unwrap_or(0);
        return Err(CarbonError::Infeasible(format!(
            "constraint row {} cannot be satisfied (residual {:.3e})",
            row, infeas
        )));
    }
    // drive any remaining artificials (at zero level) out of the basis
    for r in 0..m {
        if basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| t[(r, j)].abs() > PIVOT_EPS) {
                pivot(&mut t, &mut basis, r, j);
            }
            // a row with no structural pivot is redundant; leave the
            // zero-level artificial in place (does not occur for the
            // clearing LP structure, whose rows are always independent)
        }
    }

    // phase 2 with the real costs
    let mut phase2_cost = vec![0.0; total];
    phase2_cost[..n].copy_from_slice(&lp.c);
    run_phase(&mut t, &mut basis, &phase2_cost, n, false)?;

    let mut x = vec![0.0; n];
    for (r, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = t[(r, total)];
        }
    }
    let objective: f64 = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();

    // duals from the optimal basis: A_B' y = c_B
    let mut a_b = Mat::zeros(m, m);
    let mut c_b = vec![0.0; m];
    for (k, &j) in basis.iter().enumerate() {
        for r in 0..m {
            a_b[(r, k)] = if j < n {
                lp.a[(r, j)]
            } else if j - n == r {
                1.0
            } else {
                0.0
            };
        }
        c_b[k] = if j < n { lp.c[j] } else { 0.0 };
    }
    let y = lu_factor(&a_b.transpose())
        .ok_or_else(|| CarbonError::Solver("singular optimal basis".into()))?
        .solve(&c_b);

    let reduced_costs: Vec<f64> = (0..n)
        .map(|j| {
            let mut d = lp.c[j];
            for r in 0..m {
                d -= y[r] * lp.a[(r, j)];
            }
            d
        })
        .collect();

    Ok(SimplexSolution {
        x,
        y,
        reduced_costs,
        objective,
    })
}

fn run_phase(
    t: &mut Mat,
    basis: &mut Vec<usize>,
    cost: &[f64],
    n_structural: usize,
    allow_artificials: bool,
) -> Result<()> {
    let m = t.nrows();
    let total = t.ncols() - 1;
    // reduced-cost row maintained implicitly via the basis multipliers:
    // recompute each iteration (m is small).
    for _iter in 0..MAX_ITERS {
        // z_j = sum over rows of cost[basis[r]] * t[r][j]
        let cb: Vec<f64> = basis.iter().map(|&j| cost[j]).collect();
        let limit = if allow_artificials { total } else { n_structural };
        // Bland: entering column = lowest index with negative reduced cost
        let mut entering = None;
        for j in 0..limit {
            if basis.contains(&j) {
                continue;
            }
            let mut d = cost[j];
            for r in 0..m {
                d -= cb[r] * t[(r, j)];
            }
            if d < -PIVOT_EPS {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            return Ok(());
        };
        // ratio test; ties broken by lowest basic variable index (Bland)
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = t[(r, j)];
            if a > PIVOT_EPS {
                let ratio = t[(r, total)] / a;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12
                            || (ratio < lratio + 1e-12 && basis[r] < basis[lr])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(CarbonError::Solver(
                "unbounded direction encountered".into(),
            ));
        };
        pivot(t, basis, r, j);
    }
    Err(CarbonError::Solver("iteration limit exceeded".into()))
}

fn pivot(t: &mut Mat, basis: &mut [usize], row: usize, col: usize) {
    let m = t.nrows();
    let w = t.ncols();
    let p = t[(row, col)];
    for c in 0..w {
        t[(row, c)] /= p;
    }
    for r in 0..m {
        if r != row {
            let f = t[(r, col)];
            if f != 0.0 {
                for c in 0..w {
                    t[(r, c)] -= f * t[(row, c)];
                }
            }
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> StandardLp {
        StandardLp {
            a: Mat::from_rows(a),
            b: b.to_vec(),
            c: c.to_vec(),
        }
    }

    #[test]
    fn solves_basic_lp() {
        // min -x1 - 2x2 s.t. x1 + x2 + s = 4, x2 + s2 = 3
        let p = lp(
            &[vec![1.0, 1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]],
            &[4.0, 3.0],
            &[-1.0, -2.0, 0.0, 0.0],
        );
        let s = solve(&p).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-9);
        assert!((s.x[1] - 3.0).abs() < 1e-9);
        assert!((s.objective + 7.0).abs() < 1e-9);
    }

    #[test]
    fn strong_duality_holds() {
        let p = lp(
            &[vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            &[6.0, 9.0],
            &[-2.0, -3.0, 0.0, 0.0],
        );
        let s = solve(&p).unwrap();
        let dual_obj: f64 = s.y.iter().zip(&p.b).map(|(y, b)| y * b).sum();
        assert!((s.objective - dual_obj).abs() < 1e-9);
        // all reduced costs nonnegative at optimum
        assert!(s.reduced_costs.iter().all(|&d| d > -1e-9));
    }

    #[test]
    fn detects_infeasible() {
        // x1 = 2 and x1 = 3 simultaneously
        let p = lp(&[vec![1.0], vec![1.0]], &[2.0, 3.0], &[1.0]);
        assert!(matches!(solve(&p), Err(CarbonError::Infeasible(_))));
    }

    #[test]
    fn negative_rhs_handled() {
        // -x1 = -5 => x1 = 5
        let p = lp(&[vec![-1.0, 0.0]], &[-5.0], &[1.0, 0.0]);
        let s = solve(&p).unwrap();
        assert!((s.x[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_across_runs() {
        let p = lp(
            &[vec![1.0, 1.0, 1.0, 1.0, 0.0], vec![1.0, -1.0, 2.0, 0.0, 1.0]],
            &[10.0, 4.0],
            &[1.0, 1.0, 1.0, 0.0, 0.0],
        );
        let s1 = solve(&p).unwrap();
        let s2 = solve(&p).unwrap();
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.y, s2.y);
    }
}
