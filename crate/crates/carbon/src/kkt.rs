//! Differentiated-KKT sensitivity analysis of the clearing LP (and its
//! quadratic-objective variant), solved with a truncated SVD pseudoinverse.
//!
//! Per period the linear system is, in block form over (pi, x, psi, phi):
//!
//! ```text
//! [ 0    A    0    0  ]         [ 1                ]
//! [ A'  -Q  -B'   B'  ] . dz =  [ 0                ]
//! [ 0   PsiB -W1   0  ]         [ Psi * du/db[:,i] ]
//! [ 0   PhiB  0   W2  ]         [ Phi * dv/db[:,i] ]
//! ```
//!
//! with Q = 0 for the linear-cost market. Inactive constraint rows are kept
//! in the system verbatim; their complementarity rows force the multiplier
//! sensitivities to zero.

use std::ops::Range;

use crate::clearing::{kkt_residual, ClearingProblem, ClearingSolution, PeriodProblem, PeriodSolution};
use crate::error::{CarbonError, Result};
use crate::linalg::{jacobi_svd, norm2, Mat, Svd};

/// Default relative truncation tolerance for the SVD pseudoinverse.
pub const DEFAULT_SVD_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BlockIndex {
    pub pi: Range<usize>,
    pub x: Range<usize>,
    pub psi: Range<usize>,
    pub phi: Range<usize>,
}

/// One period's assembled KKT sensitivity system.
#[derive(Debug, Clone)]
pub struct KktBlock {
    pub period: usize,
    pub h: Mat,
    /// Right-hand-side columns, one per bus perturbation.
    pub rhs: Mat,
    pub index: BlockIndex,
}

/// The full (block-diagonal over periods) differentiated KKT system.
#[derive(Debug, Clone)]
pub struct KktSystem {
    pub n_gens: usize,
    pub n_buses: usize,
    pub blocks: Vec<KktBlock>,
}

#[derive(Debug, Clone)]
pub struct SvdDiagnostics {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub truncation_tol: f64,
    pub condition_estimate: f64,
}

/// Sensitivities of the clearing solution to nodal load perturbations.
/// Periods decouple, so each period holds a gens x buses (resp. rows x
/// buses) block; cross-period sensitivities are identically zero.
#[derive(Debug, Clone)]
pub struct SensitivityResult {
    pub n_gens: usize,
    pub n_buses: usize,
    /// Per period: d(dispatch)/d(load), gens x buses.
    pub dx_db: Vec<Mat>,
    /// Per period: d(pi)/d(load) per bus.
    pub dpi_db: Vec<Vec<f64>>,
    pub dpsi_db: Vec<Mat>,
    pub dphi_db: Vec<Mat>,
    /// Per period SVD diagnostics of H.
    pub svd: Vec<SvdDiagnostics>,
}

impl SensitivityResult {
    /// Dispatch sensitivity column for one (bus, period) perturbation.
    pub fn dx_column(&self, bus_idx: usize, period: usize) -> Vec<f64> {
        self.dx_db[period].col(bus_idx)
    }
}

/// Right-hand-side column of the differentiated KKT system for a unit load
/// perturbation at `bus_idx` in the given period.
pub fn build_perturbation_rhs(
    problem: &PeriodProblem,
    solution: &PeriodSolution,
    bus_idx: usize,
) -> Vec<f64> {
    let n = solution.x.len();
    let m = problem.rows.len();
    let dim = 1 + n + 2 * m;
    let mut rhs = vec![0.0; dim];
    rhs[0] = 1.0; // balance row: total demand moves one-for-one
    for r in 0..m {
        rhs[1 + n + r] = solution.psi[r] * problem.du_db[(r, bus_idx)];
        rhs[1 + n + m + r] = solution.phi[r] * problem.dv_db[(r, bus_idx)];
    }
    rhs
}

/// Assemble the differentiated KKT system for the linear-cost market.
pub fn assemble_kkt_lp(problem: &ClearingProblem, solution: &ClearingSolution) -> Result<KktSystem> {
    assemble_kkt(None, problem, solution)
}

/// Assemble the quadratic-objective variant: identical to the linear
/// system except the (stationarity, x) block is `-Q`.
pub fn assemble_kkt_qp(
    q: &Mat,
    problem: &ClearingProblem,
    solution: &ClearingSolution,
) -> Result<KktSystem> {
    if q.nrows() != problem.n_gens || q.ncols() != problem.n_gens {
        return Err(CarbonError::Validation(format!(
            "Q must be {n}x{n}",
            n = problem.n_gens
        )));
    }
    for i in 0..q.nrows() {
        for j in 0..i {
            if (q[(i, j)] - q[(j, i)]).abs() > 1e-12 {
                return Err(CarbonError::Validation("Q must be symmetric".into()));
            }
        }
    }
    assemble_kkt(Some(q), problem, solution)
}

fn assemble_kkt(
    q: Option<&Mat>,
    problem: &ClearingProblem,
    solution: &ClearingSolution,
) -> Result<KktSystem> {
    let n = problem.n_gens;
    let mut blocks = Vec::with_capacity(problem.periods.len());
    for (p, s) in problem.periods.iter().zip(&solution.periods) {
        let res = period_kkt_residual(q, p, s);
        if res > 1e-8 {
            return Err(CarbonError::KktInconsistent(format!(
                "period {} stationarity residual {:.3e}",
                p.period + 1,
                res
            )));
        }
        let m = p.rows.len();
        let dim = 1 + n + 2 * m;
        let index = BlockIndex {
            pi: 0..1,
            x: 1..1 + n,
            psi: 1 + n..1 + n + m,
            phi: 1 + n + m..dim,
        };
        let mut h = Mat::zeros(dim, dim);
        // [0, A, 0, 0]
        for j in 0..n {
            h[(0, 1 + j)] = 1.0;
        }
        // [A', -Q, -B', B']
        for j in 0..n {
            h[(1 + j, 0)] = 1.0;
            if let Some(q) = q {
                for k in 0..n {
                    h[(1 + j, 1 + k)] = -q[(j, k)];
                }
            }
            for r in 0..m {
                h[(1 + j, 1 + n + r)] = -p.rows[r].coeffs[j];
                h[(1 + j, 1 + n + m + r)] = p.rows[r].coeffs[j];
            }
        }
        // [0, Psi B, -W1, 0] and [0, Phi B, 0, W2]
        for r in 0..m {
            for j in 0..n {
                h[(1 + n + r, 1 + j)] = s.psi[r] * p.rows[r].coeffs[j];
                h[(1 + n + m + r, 1 + j)] = s.phi[r] * p.rows[r].coeffs[j];
            }
            h[(1 + n + r, 1 + n + r)] = -s.w1[r];
            h[(1 + n + m + r, 1 + n + m + r)] = s.w2[r];
        }
        let mut rhs = Mat::zeros(dim, problem.n_buses);
        for b in 0..problem.n_buses {
            let col = build_perturbation_rhs(p, s, b);
            for (i, v) in col.into_iter().enumerate() {
                rhs[(i, b)] = v;
            }
        }
        blocks.push(KktBlock {
            period: p.period,
            h,
            rhs,
            index,
        });
    }
    Ok(KktSystem {
        n_gens: n,
        n_buses: problem.n_buses,
        blocks,
    })
}

fn period_kkt_residual(q: Option<&Mat>, p: &PeriodProblem, s: &PeriodSolution) -> f64 {
    match q {
        None => kkt_residual(p, s),
        Some(q) => {
            // shift the cost by the gradient term Qx and reuse the LP check
            let grad = q.mul_vec(&s.x);
            let mut shifted = p.clone();
            for j in 0..shifted.cost.len() {
                shifted.cost[j] += grad[j];
            }
            kkt_residual(&shifted, s)
        }
    }
}

/// Solve one block for arbitrary rhs columns, returning the solutions and
/// the SVD diagnostics. One factorization, applied per column.
pub fn solve_block_columns(
    block: &KktBlock,
    columns: &[Vec<f64>],
    rel_tol: f64,
) -> (Vec<Vec<f64>>, SvdDiagnostics) {
    let svd = jacobi_svd(&block.h);
    let diag = diagnostics(&svd, rel_tol);
    let sols = columns
        .iter()
        .map(|c| svd.pinv_apply(c, rel_tol))
        .collect();
    (sols, diag)
}

fn diagnostics(svd: &Svd, rel_tol: f64) -> SvdDiagnostics {
    let sigma_max = svd.sigma.first().copied().unwrap_or(0.0);
    let rank = svd.rank(rel_tol);
    let sigma_min_retained = if rank > 0 { svd.sigma[rank - 1] } else { 0.0 };
    SvdDiagnostics {
        singular_values: svd.sigma.clone(),
        rank,
        truncation_tol: rel_tol,
        condition_estimate: if sigma_min_retained > 0.0 {
            sigma_max / sigma_min_retained
        } else {
            f64::INFINITY
        },
    }
}

/// Solve the assembled system for every (bus, period) perturbation.
pub fn solve_sensitivity(sys: &KktSystem, rel_tol: f64) -> SensitivityResult {
    let n = sys.n_gens;
    let nb = sys.n_buses;
    let mut dx_db = Vec::new();
    let mut dpi_db = Vec::new();
    let mut dpsi_db = Vec::new();
    let mut dphi_db = Vec::new();
    let mut diags = Vec::new();
    for block in &sys.blocks {
        let svd = jacobi_svd(&block.h);
        diags.push(diagnostics(&svd, rel_tol));
        let m = block.index.psi.len();
        let mut dx = Mat::zeros(n, nb);
        let mut dpi = vec![0.0; nb];
        let mut dpsi = Mat::zeros(m, nb);
        let mut dphi = Mat::zeros(m, nb);
        for b in 0..nb {
            let rhs = block.rhs.col(b);
            let dz = svd.pinv_apply(&rhs, rel_tol);
            dpi[b] = dz[block.index.pi.start];
            for (j, i) in block.index.x.clone().enumerate() {
                dx[(j, b)] = dz[i];
            }
            for (r, i) in block.index.psi.clone().enumerate() {
                dpsi[(r, b)] = dz[i];
            }
            for (r, i) in block.index.phi.clone().enumerate() {
                dphi[(r, b)] = dz[i];
            }
        }
        dx_db.push(dx);
        dpi_db.push(dpi);
        dpsi_db.push(dpsi);
        dphi_db.push(dphi);
    }
    SensitivityResult {
        n_gens: n,
        n_buses: nb,
        dx_db,
        dpi_db,
        dpsi_db,
        dphi_db,
        svd: diags,
    }
}

/// Residual `||H dz - drho|| / ||drho||` for one solved column; meaningful
/// when H has full rank.
pub fn column_residual(block: &KktBlock, dz: &[f64], rhs: &[f64]) -> f64 {
    let hdz = block.h.mul_vec(dz);
    let diff: Vec<f64> = hdz.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let denom = norm2(rhs);
    if denom == 0.0 {
        norm2(&diff)
    } else {
        norm2(&diff) / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clearing::{assemble_clearing_lp, clear_case, solve_lp};
    use crate::grid::{build_ptdf, builtin_case, Bus, CaseData, Generator, LoadProfile};

    fn paper3_solved() -> (ClearingProblem, ClearingSolution) {
        let c = builtin_case("paper-3bus").unwrap();
        let ptdf = build_ptdf(&c).unwrap();
        clear_case(&c, &ptdf).unwrap()
    }

    #[test]
    fn block_dimensions() {
        let (prob, sol) = paper3_solved();
        let sys = assemble_kkt_lp(&prob, &sol).unwrap();
        assert_eq!(sys.blocks.len(), 1);
        let b = &sys.blocks[0];
        assert_eq!(b.h.nrows(), 13, "1 + 2 + 5 + 5");
        assert_eq!(b.h.ncols(), 13);
        assert_eq!(b.rhs.ncols(), 3);
    }

    #[test]
    fn rhs_for_slack_bus_is_pure_balance_unit() {
        let (prob, sol) = paper3_solved();
        let rhs = build_perturbation_rhs(&prob.periods[0], &sol.periods[0], 0);
        assert_eq!(rhs[0], 1.0);
        assert!(rhs[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rhs_for_bus2_carries_psi_times_ptdf() {
        let (prob, sol) = paper3_solved();
        let rhs = build_perturbation_rhs(&prob.periods[0], &sol.periods[0], 1);
        // psi block starts at 1 + n = 3; line 2-3 is row index 2
        let v = rhs[3 + 2];
        assert!((v - sol.periods[0].psi[2] * 0.5).abs() < 1e-8);
    }

    #[test]
    fn table1_redispatch_columns() {
        let (prob, sol) = paper3_solved();
        let sys = assemble_kkt_lp(&prob, &sol).unwrap();
        let sens = solve_sensitivity(&sys, DEFAULT_SVD_TOL);
        let expected = [
            (0, [1.0, 0.0]),  // bus 1 -> (131, 30)
            (1, [3.0, -2.0]), // bus 2 -> (133, 28)
            (2, [0.0, 1.0]),  // bus 3 -> (130, 31)
        ];
        for (bus, dx) in expected {
            let col = sens.dx_column(bus, 0);
            assert!((col[0] - dx[0]).abs() < 1e-8, "bus {bus} dG1");
            assert!((col[1] - dx[1]).abs() < 1e-8, "bus {bus} dG3");
        }
    }

    #[test]
    fn column_sums_to_one() {
        let (prob, sol) = paper3_solved();
        let sys = assemble_kkt_lp(&prob, &sol).unwrap();
        let sens = solve_sensitivity(&sys, DEFAULT_SVD_TOL);
        for bus in 0..3 {
            let s: f64 = sens.dx_column(bus, 0).iter().sum();
            assert!((s - 1.0).abs() < 1e-8, "bus {bus}");
        }
    }

    #[test]
    fn pseudoinverse_residual_small_at_full_rank() {
        let (prob, sol) = paper3_solved();
        let sys = assemble_kkt_lp(&prob, &sol).unwrap();
        let block = &sys.blocks[0];
        let svd = jacobi_svd(&block.h);
        assert_eq!(svd.rank(DEFAULT_SVD_TOL), 13, "full rank here");
        for b in 0..3 {
            let rhs = block.rhs.col(b);
            let dz = svd.pinv_apply(&rhs, DEFAULT_SVD_TOL);
            assert!(column_residual(block, &dz, &rhs) < 1e-6);
        }
    }

    #[test]
    fn qp_zero_matches_lp_assembly() {
        let (prob, sol) = paper3_solved();
        let lp = assemble_kkt_lp(&prob, &sol).unwrap();
        let qp = assemble_kkt_qp(&Mat::zeros(2, 2), &prob, &sol).unwrap();
        assert_eq!(lp.blocks[0].h, qp.blocks[0].h);
        assert_eq!(lp.blocks[0].rhs, qp.blocks[0].rhs);
    }

    #[test]
    fn asymmetric_q_rejected() {
        let (prob, sol) = paper3_solved();
        let mut q = Mat::zeros(2, 2);
        q[(0, 1)] = 1.0;
        assert!(matches!(
            assemble_kkt_qp(&q, &prob, &sol),
            Err(CarbonError::Validation(_))
        ));
    }

    #[test]
    fn kkt_inconsistent_solution_refused() {
        let (prob, mut sol) = paper3_solved();
        sol.periods[0].pi += 1.0;
        assert!(matches!(
            assemble_kkt_lp(&prob, &sol),
            Err(CarbonError::KktInconsistent(_))
        ));
    }

    #[test]
    fn degenerate_case_rank_deficient() {
        // two identical generators at one bus: the optimal split is not
        // unique, H loses rank
        let c = CaseData {
            name: "degen".into(),
            periods: 1,
            slack_bus: 1,
            buses: vec![Bus { id: 1 }],
            lines: vec![],
            generators: vec![
                Generator {
                    id: "A".into(),
                    bus: 1,
                    pmax_mw: 100.0,
                    bid_per_mwh: 10.0,
                    emission_t_per_mwh: 0.5,
                },
                Generator {
                    id: "B".into(),
                    bus: 1,
                    pmax_mw: 100.0,
                    bid_per_mwh: 10.0,
                    emission_t_per_mwh: 0.5,
                },
            ],
            loads: vec![LoadProfile {
                bus: 1,
                mw: vec![50.0],
            }],
        };
        let ptdf = build_ptdf(&c).unwrap();
        let prob = assemble_clearing_lp(&c, &ptdf, &c.load_matrix()).unwrap();
        let sol = solve_lp(&prob).unwrap();
        let sys = assemble_kkt_lp(&prob, &sol).unwrap();
        let sens = solve_sensitivity(&sys, DEFAULT_SVD_TOL);
        assert!(
            sens.svd[0].rank < sys.blocks[0].h.nrows(),
            "rank {} of {}",
            sens.svd[0].rank,
            sys.blocks[0].h.nrows()
        );
    }
}
