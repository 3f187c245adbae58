//! Run the 24-hour six-bus case and render the spatio-temporal heatmap
//! (line loading plus nodal LMCE) as an SVG.

use carbon::grid::builtin_case;
use carbon::pipeline::{self, PipelineConfig};
use carbon::report::{fmt_g, heatmap_svg};

fn main() -> carbon::Result<()> {
    let case = builtin_case("synthetic-6bus-24h")?;
    let result = pipeline::run(case, &PipelineConfig::default())?;

    let rates = result.flow_rates_pct();
    let congested_hours = rates
        .iter()
        .filter(|per_line| per_line.iter().any(|&x| x >= 99.9))
        .count();
    println!(
        "{} of {} hours have a line at its limit",
        congested_hours, result.case.periods
    );
    println!(
        "peak-hour LMCE by bus: {}",
        result.lmce.value[17]
            .iter()
            .map(|v| fmt_g(*v))
            .collect::<Vec<_>>()
            .join(", ")
    );

    let svg = heatmap_svg(&result.case, &rates, &result.lmce.value);
    let path = std::env::temp_dir().join("carbon_heatmap.svg");
    std::fs::write(&path, svg).map_err(carbon::CarbonError::Io)?;
    println!("wrote {}", path.display());
    Ok(())
}
