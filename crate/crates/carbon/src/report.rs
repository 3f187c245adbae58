//! Report generation: CSV and Markdown tables plus the spatio-temporal
//! SVG heatmap. All output is deterministic for fixed input: UTF-8, LF
//! line endings, numbers with 6 significant digits.

use crate::cef::CefResult;
use crate::clearing::ClearingSolution;
use crate::emissions::{LaceResult, LmceResult};
use crate::grid::CaseData;

/// Format with 6 significant digits, trimming trailing zeros (the C
/// `%.6g` convention, minus its exponent padding).
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 || x.abs() < 1e-300 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let s = if !(-5..6).contains(&exp) {
        let sci = format!("{:.5e}", x);
        let (mant, e) = sci.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mant), e)
    } else {
        let prec = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", prec, x))
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Md,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Md => "md",
        }
    }
}

fn render(headers: &[&str], rows: &[Vec<String>], format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(&headers.join(","));
            out.push('\n');
            for row in rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        ReportFormat::Md => {
            out.push_str(&format!("| {} |\n", headers.join(" | ")));
            out.push_str(&format!(
                "|{}|\n",
                headers.iter().map(|_| " --- ").collect::<Vec<_>>().join("|")
            ));
            for row in rows {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
        }
    }
    out
}

pub fn clearing_report(case: &CaseData, sol: &ClearingSolution, format: ReportFormat) -> String {
    let headers = ["period", "generator", "dispatch_mw", "pi_per_mwh"];
    let mut rows = Vec::new();
    for (t, p) in sol.periods.iter().enumerate() {
        for (g, gen) in case.generators.iter().enumerate() {
            rows.push(vec![
                (t + 1).to_string(),
                gen.id.clone(),
                fmt_g(p.x[g]),
                fmt_g(p.pi),
            ]);
        }
    }
    render(&headers, &rows, format)
}

pub fn lmce_report(case: &CaseData, lmce: &LmceResult, format: ReportFormat) -> String {
    let headers = ["period", "bus", "lmce_t_per_mwh", "energy_part", "network_part"];
    let mut rows = Vec::new();
    for (t, per_bus) in lmce.value.iter().enumerate() {
        for (b, v) in per_bus.iter().enumerate() {
            let energy = lmce.energy_part.as_ref().map_or(*v, |e| e[t][b]);
            let network = lmce.network_part.as_ref().map_or(0.0, |n| n[t][b]);
            rows.push(vec![
                (t + 1).to_string(),
                case.buses[b].id.to_string(),
                fmt_g(*v),
                fmt_g(energy),
                fmt_g(network),
            ]);
        }
    }
    render(&headers, &rows, format)
}

pub fn lace_report(case: &CaseData, lace: &LaceResult, format: ReportFormat) -> String {
    let headers = ["period", "bus", "lace_t_per_mwh", "allocation_t", "breakpoints"];
    let bps = lace
        .breakpoints
        .iter()
        .map(|&b| fmt_g(b))
        .collect::<Vec<_>>()
        .join(";");
    let mut rows = Vec::new();
    for (t, per_bus) in lace.value.iter().enumerate() {
        for (b, v) in per_bus.iter().enumerate() {
            rows.push(vec![
                (t + 1).to_string(),
                case.buses[b].id.to_string(),
                fmt_g(*v),
                fmt_g(lace.allocation[t][b]),
                bps.clone(),
            ]);
        }
    }
    render(&headers, &rows, format)
}

pub fn cef_report(case: &CaseData, cef: &CefResult, format: ReportFormat) -> String {
    let headers = ["period", "bus", "nci_t_per_mwh", "allocation_t"];
    let mut rows = Vec::new();
    for (t, per_bus) in cef.nci.iter().enumerate() {
        for (b, v) in per_bus.iter().enumerate() {
            rows.push(vec![
                (t + 1).to_string(),
                case.buses[b].id.to_string(),
                fmt_g(*v),
                fmt_g(cef.allocation[t][b]),
            ]);
        }
    }
    render(&headers, &rows, format)
}

/// Side-by-side allocation comparison (CEF vs LACE) with a totals row.
/// For multi-period cases allocations are summed over periods and the
/// intensity columns show load-weighted averages.
pub fn compare_report(
    case: &CaseData,
    cef: &CefResult,
    lace: &LaceResult,
    format: ReportFormat,
) -> String {
    let headers = [
        "bus",
        "load_mwh",
        "cef_nci_t_per_mwh",
        "cef_allocation_t",
        "lace_t_per_mwh",
        "lace_allocation_t",
    ];
    let nb = case.n_buses();
    let nt = lace.value.len();
    let loads: Vec<Vec<f64>> = (0..nt).map(|t| case.load_vector(t)).collect();
    let mut rows = Vec::new();
    let (mut cef_total, mut lace_total) = (0.0, 0.0);
    for b in 0..nb {
        let energy: f64 = (0..nt).map(|t| loads[t][b]).sum();
        let cef_alloc: f64 = (0..nt).map(|t| cef.allocation[t][b]).sum();
        let lace_alloc: f64 = (0..nt).map(|t| lace.allocation[t][b]).sum();
        cef_total += cef_alloc;
        lace_total += lace_alloc;
        let (cef_avg, lace_avg) = if energy > 0.0 {
            (cef_alloc / energy, lace_alloc / energy)
        } else {
            (cef.nci[0][b], lace.value[0][b])
        };
        rows.push(vec![
            case.buses[b].id.to_string(),
            fmt_g(energy),
            fmt_g(cef_avg),
            fmt_g(cef_alloc),
            fmt_g(lace_avg),
            fmt_g(lace_alloc),
        ]);
    }
    let total_load: f64 = loads.iter().flatten().sum();
    rows.push(vec![
        "total".to_string(),
        fmt_g(total_load),
        String::new(),
        fmt_g(cef_total),
        String::new(),
        fmt_g(lace_total),
    ]);
    render(&headers, &rows, format)
}

/// Threshold above which a cell is outlined as congested (flow-rate %).
pub const CONGESTION_OUTLINE_PCT: f64 = 99.9;

const CELL: i32 = 22;
const LABEL_W: i32 = 70;
const TITLE_H: i32 = 24;

/// Spatio-temporal heatmap: one grid of line flow-rate percentages (cells
/// at or above 99.9% outlined) and one grid of per-bus LMCE on a diverging
/// scale centered at zero (negative green, positive red).
pub fn heatmap_svg(case: &CaseData, flow_rate_pct: &[Vec<f64>], lmce: &[Vec<f64>]) -> String {
    let nt = flow_rate_pct.len();
    let nl = case.lines.len();
    let nb = case.n_buses();
    let grid_w = LABEL_W + CELL * nt as i32 + 10;
    let g1_h = TITLE_H + CELL * nl as i32 + 10;
    let g2_h = TITLE_H + CELL * nb as i32 + 30;
    let width = grid_w.max(300);
    let height = g1_h + g2_h;

    let max_abs_lmce = lmce
        .iter()
        .flatten()
        .fold(0.0f64, |a, &x| a.max(x.abs()))
        .max(1e-12);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"monospace\" font-size=\"11\">\n"
    ));
    s.push_str(&format!(
        "<text x=\"4\" y=\"16\">line flow rate (% of capacity), {}</text>\n",
        xml_escape(&case.name)
    ));
    for (li, line) in case.lines.iter().enumerate() {
        let y = TITLE_H + CELL * li as i32;
        s.push_str(&format!(
            "<text x=\"4\" y=\"{}\">{}-{}</text>\n",
            y + CELL - 7,
            line.from_bus,
            line.to_bus
        ));
        for t in 0..nt {
            let x = LABEL_W + CELL * t as i32;
            let rate = flow_rate_pct[t][li].clamp(0.0, 100.0);
            let shade = (255.0 - 1.8 * rate).round() as i32;
            let congested = flow_rate_pct[t][li] >= CONGESTION_OUTLINE_PCT;
            let stroke = if congested {
                "stroke=\"#000000\" stroke-width=\"2\""
            } else {
                "stroke=\"#cccccc\" stroke-width=\"0.5\""
            };
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"rgb({shade},{shade},255)\" {stroke}/>\n"
            ));
        }
    }
    let base2 = g1_h;
    s.push_str(&format!(
        "<text x=\"4\" y=\"{}\">nodal LMCE (tCO2/MWh)</text>\n",
        base2 + 16
    ));
    for b in 0..nb {
        let y = base2 + TITLE_H + CELL * b as i32;
        s.push_str(&format!(
            "<text x=\"4\" y=\"{}\">bus {}</text>\n",
            y + CELL - 7,
            case.buses[b].id
        ));
        for (t, per_bus) in lmce.iter().enumerate() {
            let x = LABEL_W + CELL * t as i32;
            let v = per_bus[b] / max_abs_lmce; // in [-1, 1]
            let (r, g) = if v >= 0.0 {
                (255, (255.0 * (1.0 - v)).round() as i32)
            } else {
                ((255.0 * (1.0 + v)).round() as i32, 255)
            };
            let bch = (255.0 * (1.0 - v.abs())).round() as i32;
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"rgb({r},{g},{bch})\" stroke=\"#cccccc\" stroke-width=\"0.5\"/>\n"
            ));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
