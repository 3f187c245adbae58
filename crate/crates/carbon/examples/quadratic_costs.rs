//! Sensitivity analysis for a clearing problem with quadratic costs:
//! two units share one bus, and the marginal MW splits between them in
//! inverse proportion to their cost curvatures.

use carbon::clearing::{ClearingProblem, ClearingSolution, IneqRow, PeriodProblem, RowKind};
use carbon::kkt::{assemble_kkt_qp, solve_sensitivity, DEFAULT_SVD_TOL};
use carbon::linalg::Mat;
use carbon::oracle::solve_qp_active_set;
use carbon::report::fmt_g;

fn main() -> carbon::Result<()> {
    let (q1, q2) = (2.0, 3.0);
    let demand = 10.0;

    let p = PeriodProblem {
        period: 0,
        cost: vec![0.0, 0.0],
        balance_rhs: demand,
        rows: vec![
            IneqRow {
                kind: RowKind::Capacity(0),
                coeffs: vec![1.0, 0.0],
                lower: 0.0,
                upper: 100.0,
            },
            IneqRow {
                kind: RowKind::Capacity(1),
                coeffs: vec![0.0, 1.0],
                lower: 0.0,
                upper: 100.0,
            },
        ],
        du_db: Mat::zeros(2, 1),
        dv_db: Mat::zeros(2, 1),
    };
    let mut q = Mat::zeros(2, 2);
    q[(0, 0)] = q1;
    q[(1, 1)] = q2;

    let s = solve_qp_active_set(&q, &p)?;
    println!(
        "dispatch ({}, {}) MW at price {} $/MWh",
        fmt_g(s.x[0]),
        fmt_g(s.x[1]),
        fmt_g(s.pi)
    );

    let problem = ClearingProblem {
        n_gens: 2,
        n_buses: 1,
        periods: vec![p],
    };
    let solution = ClearingSolution {
        objective: s.objective,
        periods: vec![s],
    };
    let sys = assemble_kkt_qp(&q, &problem, &solution)?;
    let sens = solve_sensitivity(&sys, DEFAULT_SVD_TOL);
    let col = sens.dx_column(0, 0);
    println!(
        "marginal MW split: dp1/dd = {} (analytic q2/(q1+q2) = {}), dp2/dd = {}",
        fmt_g(col[0]),
        fmt_g(q2 / (q1 + q2)),
        fmt_g(col[1])
    );
    Ok(())
}
