//! End-to-end orchestration: clear a case, run the sensitivity analysis,
//! compute the emission metrics and the CEF baseline, and hand everything
//! to the reporting layer.

use crate::cef::{cef_from_dispatch, CefResult};
use crate::clearing::{clear_case, ClearingProblem, ClearingSolution};
use crate::emissions::{
    compute_lace, compute_lace_riemann, decompose_lmce, find_breakpoints, total_emission_all,
    verify_conservation, ConservationReport, EmissionVector, LaceResult, LmceResult,
    DEFAULT_SIGMA_SEEDS, DEFAULT_SIGMA_TOL,
};
use crate::error::Result;
use crate::grid::{build_ptdf, CaseData, PtdfMatrix};
use crate::kkt::{assemble_kkt_lp, solve_sensitivity, SensitivityResult, DEFAULT_SVD_TOL};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub svd_tol: f64,
    pub sigma_seeds: usize,
    /// When set, also run the Riemann-sum LACE cross-check on this many
    /// grid points.
    pub riemann_points: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            svd_tol: DEFAULT_SVD_TOL,
            sigma_seeds: DEFAULT_SIGMA_SEEDS,
            riemann_points: None,
        }
    }
}

pub struct PipelineResult {
    pub case: CaseData,
    pub ptdf: PtdfMatrix,
    pub problem: ClearingProblem,
    pub solution: ClearingSolution,
    pub sensitivity: SensitivityResult,
    pub lmce: LmceResult,
    pub lace: LaceResult,
    pub lace_riemann: Option<LaceResult>,
    pub cef: CefResult,
    pub total_emission: f64,
    pub conservation: ConservationReport,
}

impl PipelineResult {
    /// Flow-rate percentage (|flow| / capacity * 100) per `[period][line]`.
    pub fn flow_rates_pct(&self) -> Vec<Vec<f64>> {
        self.cef
            .flows
            .iter()
            .map(|per_line| {
                per_line
                    .iter()
                    .zip(&self.case.lines)
                    .map(|(f, l)| f.abs() / l.capacity_mw * 100.0)
                    .collect()
            })
            .collect()
    }
}

/// Run the whole pipeline on a case at its own loads.
pub fn run(case: CaseData, config: &PipelineConfig) -> Result<PipelineResult> {
    let ptdf = build_ptdf(&case)?;
    let (problem, solution) = clear_case(&case, &ptdf)?;
    let sys = assemble_kkt_lp(&problem, &solution)?;
    let sensitivity = solve_sensitivity(&sys, config.svd_tol);
    let k = EmissionVector::from_case(&case);
    let lmce = decompose_lmce(&k, &sys, config.svd_tol);
    let loads = case.load_matrix();
    let breakpoints = find_breakpoints(
        &case,
        &ptdf,
        &loads,
        DEFAULT_SIGMA_TOL,
        config.sigma_seeds,
    )?;
    let lace = compute_lace(&case, &ptdf, &loads, &breakpoints, config.svd_tol)?;
    let lace_riemann = match config.riemann_points {
        Some(n) => Some(compute_lace_riemann(&case, &ptdf, &loads, n, config.svd_tol)?),
        None => None,
    };
    let dispatch: Vec<Vec<f64>> = solution.periods.iter().map(|p| p.x.clone()).collect();
    let cef = cef_from_dispatch(&case, &ptdf, &dispatch)?;
    let total_emission = total_emission_all(&k, &solution);
    let conservation = verify_conservation(&lace, total_emission);
    Ok(PipelineResult {
        case,
        ptdf,
        problem,
        solution,
        sensitivity,
        lmce,
        lace,
        lace_riemann,
        cef,
        total_emission,
        conservation,
    })
}
