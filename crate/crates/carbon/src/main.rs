use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use carbon::grid::{builtin_case, load_case, CaseData, BUILTIN_CASES};
use carbon::pipeline::{self, PipelineConfig};
use carbon::report::{self, ReportFormat};
use carbon::CarbonError;

/// Locational marginal/average carbon emission toolkit.
#[derive(Parser)]
#[command(name = "carbon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Clear the market and report the dispatch.
    Clear(RunArgs),
    /// Locational marginal carbon emission with decomposition.
    Lmce(RunArgs),
    /// Locational average carbon emission with allocations.
    Lace(RunArgs),
    /// Carbon-emission-flow baseline (NCI and allocations).
    Cef(RunArgs),
    /// Side-by-side CEF vs LACE allocation table.
    Compare(RunArgs),
    /// Spatio-temporal SVG heatmap of flow rates and LMCE.
    Heatmap(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Case file path or builtin name (paper-3bus, synthetic-6bus-24h).
    #[arg(long = "case")]
    case: String,
    /// Output directory (default: CARBON_OUT or ./out).
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Relative SVD truncation tolerance.
    #[arg(long = "svd-tol", default_value_t = carbon::kkt::DEFAULT_SVD_TOL)]
    svd_tol: f64,
    /// Seed points for the breakpoint scan.
    #[arg(long = "sigma-seeds", default_value_t = carbon::emissions::DEFAULT_SIGMA_SEEDS)]
    sigma_seeds: usize,
    /// Run the Riemann-sum LACE cross-check on this many grid points.
    #[arg(long = "riemann")]
    riemann: Option<usize>,
    /// Report format.
    #[arg(long = "format", value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Md => ReportFormat::Md,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("carbon: {e:#}");
            let code = e
                .downcast_ref::<CarbonError>()
                .map(CarbonError::exit_code)
                .unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}

fn load(name: &str) -> Result<CaseData, CarbonError> {
    if BUILTIN_CASES.contains(&name) {
        builtin_case(name)
    } else {
        load_case(name)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let args = match &cli.command {
        Command::Clear(a)
        | Command::Lmce(a)
        | Command::Lace(a)
        | Command::Cef(a)
        | Command::Compare(a)
        | Command::Heatmap(a) => a,
    };
    let case = load(&args.case)?;
    let config = PipelineConfig {
        svd_tol: args.svd_tol,
        sigma_seeds: args.sigma_seeds,
        riemann_points: args.riemann,
    };
    if !(args.svd_tol > 0.0) || args.sigma_seeds == 0 {
        return Err(CarbonError::Validation("numeric options must be positive".into()).into());
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os("CARBON_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)
        .map_err(CarbonError::Io)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    let result = pipeline::run(case, &config)?;
    let fmt: ReportFormat = args.format.into();
    match cli.command {
        Command::Clear(_) => {
            let text = report::clearing_report(&result.case, &result.solution, fmt);
            write_report(&out_dir, "clearing", fmt, &text)?;
            println!(
                "objective {} total_emission_t {}",
                report::fmt_g(result.solution.objective),
                report::fmt_g(result.total_emission)
            );
        }
        Command::Lmce(_) => {
            let text = report::lmce_report(&result.case, &result.lmce, fmt);
            write_report(&out_dir, "lmce", fmt, &text)?;
        }
        Command::Lace(_) => {
            let text = report::lace_report(&result.case, &result.lace, fmt);
            write_report(&out_dir, "lace", fmt, &text)?;
            if let Some(riemann) = &result.lace_riemann {
                let text = report::lace_report(&result.case, riemann, fmt);
                write_report(&out_dir, "lace_riemann", fmt, &text)?;
            }
        }
        Command::Cef(_) => {
            let text = report::cef_report(&result.case, &result.cef, fmt);
            write_report(&out_dir, "cef", fmt, &text)?;
        }
        Command::Compare(_) => {
            let text = report::compare_report(&result.case, &result.cef, &result.lace, fmt);
            write_report(&out_dir, "compare", fmt, &text)?;
            println!(
                "demand-side lace total {} generation-side total {} relative gap {}",
                report::fmt_g(result.conservation.allocated_total),
                report::fmt_g(result.conservation.actual_total),
                report::fmt_g(result.conservation.relative_gap)
            );
        }
        Command::Heatmap(_) => {
            let svg =
                report::heatmap_svg(&result.case, &result.flow_rates_pct(), &result.lmce.value);
            let path = out_dir.join("heatmap.svg");
            std::fs::write(&path, svg).map_err(CarbonError::Io)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn write_report(dir: &Path, stem: &str, fmt: ReportFormat, text: &str) -> anyhow::Result<()> {
    let path = dir.join(format!("{stem}.{}", fmt.extension()));
    std::fs::write(&path, text).map_err(CarbonError::Io)?;
    println!("wrote {}", path.display());
    Ok(())
}
