//! Locate the binding-set breakpoints along the load ray, average the
//! piecewise-constant LMCE into LACE, and verify that the demand-side
//! allocation reproduces the generation-side emission total.

use carbon::clearing::clear_case;
use carbon::emissions::{
    compute_lace, compute_lace_riemann, find_breakpoints, total_emission_all, verify_conservation,
    EmissionVector, DEFAULT_SIGMA_SEEDS, DEFAULT_SIGMA_TOL,
};
use carbon::grid::{build_ptdf, builtin_case};
use carbon::kkt::DEFAULT_SVD_TOL;
use carbon::report::fmt_g;

fn main() -> carbon::Result<()> {
    let case = builtin_case("paper-3bus")?;
    let ptdf = build_ptdf(&case)?;
    let loads = case.load_matrix();

    let bps = find_breakpoints(&case, &ptdf, &loads, DEFAULT_SIGMA_TOL, DEFAULT_SIGMA_SEEDS)?;
    println!(
        "breakpoints along the load ray: {}",
        bps.iter().map(|b| fmt_g(*b)).collect::<Vec<_>>().join(", ")
    );

    let lace = compute_lace(&case, &ptdf, &loads, &bps, DEFAULT_SVD_TOL)?;
    for (i, bus) in case.buses.iter().enumerate() {
        println!(
            "bus {}: lace {} tCO2/MWh, allocation {} tCO2",
            bus.id,
            fmt_g(lace.value[0][i]),
            fmt_g(lace.allocation[0][i])
        );
    }

    let (_, sol) = clear_case(&case, &ptdf)?;
    let actual = total_emission_all(&EmissionVector::from_case(&case), &sol);
    let report = verify_conservation(&lace, actual);
    println!(
        "allocated {} vs generated {} tCO2 (relative gap {})",
        fmt_g(report.allocated_total),
        fmt_g(report.actual_total),
        fmt_g(report.relative_gap)
    );

    // brute-force cross-check: midpoint rule over the whole ray
    let riemann = compute_lace_riemann(&case, &ptdf, &loads, 2000, DEFAULT_SVD_TOL)?;
    println!(
        "2000-point Riemann cross-check: {}",
        riemann.value[0]
            .iter()
            .map(|v| fmt_g(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}
