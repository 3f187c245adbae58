//! Clear the three-bus case and print the dispatch, the clearing price,
//! and the line flows.

use carbon::clearing::clear_case;
use carbon::grid::{build_ptdf, builtin_case};
use carbon::report::fmt_g;

fn main() -> carbon::Result<()> {
    let case = builtin_case("paper-3bus")?;
    let ptdf = build_ptdf(&case)?;
    let (_, sol) = clear_case(&case, &ptdf)?;

    let p = &sol.periods[0];
    println!("case {}: objective ${}", case.name, fmt_g(p.objective));
    println!("clearing price {} $/MWh", fmt_g(p.pi));
    for (g, x) in case.generators.iter().zip(&p.x) {
        println!("  {} at bus {}: {} MW", g.id, g.bus, fmt_g(*x));
    }

    let mut inj = vec![0.0; case.n_buses()];
    for (g, x) in case.generators.iter().zip(&p.x) {
        inj[case.bus_index(g.bus).unwrap()] += x;
    }
    for (i, d) in case.load_vector(0).iter().enumerate() {
        inj[i] -= d;
    }
    for (l, f) in case.lines.iter().zip(ptdf.flows(&inj)) {
        println!(
            "  line {}-{}: {} MW of {} MW",
            l.from_bus,
            l.to_bus,
            fmt_g(f),
            fmt_g(l.capacity_mw)
        );
    }
    Ok(())
}
