//! Differentiate the clearing KKT system and print each bus's LMCE with
//! its energy/network decomposition, cross-checked against finite
//! differences.

use carbon::clearing::clear_case;
use carbon::emissions::{decompose_lmce, EmissionVector};
use carbon::grid::{build_ptdf, builtin_case};
use carbon::kkt::{assemble_kkt_lp, solve_sensitivity, DEFAULT_SVD_TOL};
use carbon::oracle::{finite_diff_sensitivity, DEFAULT_FD_EPS};
use carbon::report::fmt_g;

fn main() -> carbon::Result<()> {
    let case = builtin_case("paper-3bus")?;
    let ptdf = build_ptdf(&case)?;
    let loads = case.load_matrix();
    let (prob, sol) = clear_case(&case, &ptdf)?;

    let sys = assemble_kkt_lp(&prob, &sol)?;
    let sens = solve_sensitivity(&sys, DEFAULT_SVD_TOL);
    let k = EmissionVector::from_case(&case);
    let d = decompose_lmce(&k, &sys, DEFAULT_SVD_TOL);
    let energy = d.energy_part.as_ref().unwrap();
    let network = d.network_part.as_ref().unwrap();

    println!("bus  lmce      energy    network   fd-check  redispatch (MW/MW)");
    for (i, bus) in case.buses.iter().enumerate() {
        let fd = finite_diff_sensitivity(&case, &ptdf, &loads, i, 0, DEFAULT_FD_EPS)?;
        let fd_rho: f64 = fd.iter().zip(&k.k).map(|(dx, kk)| dx * kk).sum();
        let col = sens.dx_column(i, 0);
        println!(
            "{:<4} {:<9} {:<9} {:<9} {:<9} {:?}",
            bus.id,
            fmt_g(d.value[0][i]),
            fmt_g(energy[0][i]),
            fmt_g(network[0][i]),
            fmt_g(fd_rho),
            col.iter().map(|v| fmt_g(*v)).collect::<Vec<_>>()
        );
    }
    println!(
        "KKT rank {}/{} (condition estimate {})",
        sens.svd[0].rank,
        sys.blocks[0].h.nrows(),
        fmt_g(sens.svd[0].condition_estimate)
    );
    Ok(())
}
