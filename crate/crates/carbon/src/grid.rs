//! Grid data model: case ingestion and validation, PTDF construction, and
//! the two built-in study cases.
//!
//! Everything is in natural MW units. Line reactances are relative; only
//! their ratios matter for the DC power transfer distribution factors.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use crate::error::{CarbonError, Result};
use crate::linalg::{lu_factor, Mat};

pub type BusId = i64;

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub reactance: f64,
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    pub bus: BusId,
    pub pmax_mw: f64,
    pub bid_per_mwh: f64,
    pub emission_t_per_mwh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub bus: BusId,
    pub mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseData {
    pub name: String,
    pub periods: usize,
    pub slack_bus: BusId,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
    pub loads: Vec<LoadProfile>,
}

impl CaseData {
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Per-bus load vector for one period, in bus order.
    pub fn load_vector(&self, period: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.buses.len()];
        for lp in &self.loads {
            let i = self.bus_index(lp.bus).expect("validated");
            d[i] += lp.mw[period];
        }
        d
    }

    /// All per-bus load vectors, one per period.
    pub fn load_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.periods).map(|t| self.load_vector(t)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.buses.is_empty() {
            return Err(CarbonError::Validation("case has no buses".into()));
        }
        if self.periods == 0 {
            return Err(CarbonError::Validation("periods must be positive".into()));
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(CarbonError::Validation(format!("duplicate bus id {}", b.id)));
            }
        }
        if self.bus_index(self.slack_bus).is_none() {
            return Err(CarbonError::Validation(format!(
                "slack bus {} does not exist",
                self.slack_bus
            )));
        }
        for l in &self.lines {
            if l.reactance <= 0.0 {
                return Err(CarbonError::Validation("reactance must be positive".into()));
            }
            if l.capacity_mw <= 0.0 {
                return Err(CarbonError::Validation(
                    "line capacity must be positive".into(),
                ));
            }
            if l.from_bus == l.to_bus {
                return Err(CarbonError::Validation(format!(
                    "line endpoints coincide at bus {}",
                    l.from_bus
                )));
            }
            if self.bus_index(l.from_bus).is_none() || self.bus_index(l.to_bus).is_none() {
                return Err(CarbonError::Validation(format!(
                    "line {}-{} references unknown bus",
                    l.from_bus, l.to_bus
                )));
            }
        }
        for g in &self.generators {
            if g.pmax_mw < 0.0 {
                return Err(CarbonError::Validation(format!(
                    "generator {} pmax must be nonnegative",
                    g.id
                )));
            }
            if g.emission_t_per_mwh < 0.0 {
                return Err(CarbonError::Validation(format!(
                    "generator {} emission factor must be nonnegative",
                    g.id
                )));
            }
            if self.bus_index(g.bus).is_none() {
                return Err(CarbonError::Validation(format!(
                    "generator {} references unknown bus {}",
                    g.id, g.bus
                )));
            }
        }
        let mut load_buses = HashSet::new();
        for lp in &self.loads {
            if self.bus_index(lp.bus).is_none() {
                return Err(CarbonError::Validation(format!(
                    "load references unknown bus {}",
                    lp.bus
                )));
            }
            if !load_buses.insert(lp.bus) {
                return Err(CarbonError::Validation(format!(
                    "multiple load profiles for bus {}",
                    lp.bus
                )));
            }
            if lp.mw.len() != self.periods {
                return Err(CarbonError::Validation(format!(
                    "load at bus {} has {} entries, expected {}",
                    lp.bus,
                    lp.mw.len(),
                    self.periods
                )));
            }
            if lp.mw.iter().any(|&x| x < 0.0) {
                return Err(CarbonError::Validation(format!(
                    "negative load at bus {}",
                    lp.bus
                )));
            }
        }
        let total_cap: f64 = self.generators.iter().map(|g| g.pmax_mw).sum();
        for t in 0..self.periods {
            let total_load: f64 = self.load_vector(t).iter().sum();
            if total_load > total_cap + 1e-9 {
                return Err(CarbonError::Validation(format!(
                    "infeasible capacity: period {} load {} exceeds total capacity {}",
                    t + 1,
                    total_load,
                    total_cap
                )));
            }
        }
        if !self.is_connected() {
            return Err(CarbonError::Validation("network is not connected".into()));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        if self.buses.len() <= 1 {
            return true;
        }
        let mut adj: HashMap<BusId, Vec<BusId>> = HashMap::new();
        for l in &self.lines {
            adj.entry(l.from_bus).or_default().push(l.to_bus);
            adj.entry(l.to_bus).or_default().push(l.from_bus);
        }
        let mut seen = HashSet::new();
        let mut stack = vec![self.buses[0].id];
        while let Some(b) = stack.pop() {
            if seen.insert(b) {
                if let Some(ns) = adj.get(&b) {
                    stack.extend(ns.iter().copied());
                }
            }
        }
        seen.len() == self.buses.len()
    }
}

// JSON case schema; unknown keys rejected.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseFile {
    name: String,
    periods: usize,
    slack_bus: BusId,
    buses: Vec<BusFile>,
    lines: Vec<LineFile>,
    generators: Vec<GeneratorFile>,
    loads: Vec<LoadFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BusFile {
    id: BusId,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineFile {
    from: BusId,
    to: BusId,
    reactance: f64,
    capacity_mw: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorFile {
    id: String,
    bus: BusId,
    pmax_mw: f64,
    bid_per_mwh: f64,
    emission_t_per_mwh: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadFile {
    bus: BusId,
    mw: Vec<f64>,
}

/// Load and validate a case from a JSON file.
pub fn load_case(path: impl AsRef<Path>) -> Result<CaseData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|_| CarbonError::CaseNotFound(path.display().to_string()))?;
    parse_case(&text)
}

/// Parse and validate a case from JSON text.
pub fn parse_case(text: &str) -> Result<CaseData> {
    let cf: CaseFile = serde_json::from_str(text).map_err(|e| CarbonError::Parse(e.to_string()))?;
    let case = CaseData {
        name: cf.name,
        periods: cf.periods,
        slack_bus: cf.slack_bus,
        buses: cf.buses.into_iter().map(|b| Bus { id: b.id }).collect(),
        lines: cf
            .lines
            .into_iter()
            .map(|l| Line {
                from_bus: l.from,
                to_bus: l.to,
                reactance: l.reactance,
                capacity_mw: l.capacity_mw,
            })
            .collect(),
        generators: cf
            .generators
            .into_iter()
            .map(|g| Generator {
                id: g.id,
                bus: g.bus,
                pmax_mw: g.pmax_mw,
                bid_per_mwh: g.bid_per_mwh,
                emission_t_per_mwh: g.emission_t_per_mwh,
            })
            .collect(),
        loads: cf
            .loads
            .into_iter()
            .map(|l| LoadProfile {
                bus: l.bus,
                mw: l.mw,
            })
            .collect(),
    };
    case.validate()?;
    Ok(case)
}

pub const BUILTIN_CASES: &[&str] = &["paper-3bus", "synthetic-6bus-24h"];

/// Return one of the built-in study cases.
///
/// `"paper-3bus"`: two generators (G1: 200 MW, $10/MWh, 0.2 tCO2/MWh at
/// bus 1; G3: 100 MW, $30/MWh, 0.8 tCO2/MWh at bus 3), line 1-2 with twice
/// the reactance of lines 2-3 and 1-3, line 2-3 limited to 25 MW, loads of
/// 10 MW at bus 2 and 150 MW at bus 3, single period.
///
/// `"synthetic-6bus-24h"`: a 6-bus, 24-hour case with parameters chosen by
/// this crate (no published reference values). Cheap low-emission supply
/// sits at bus 1 behind limited corridors; the hourly load profile leaves
/// off-peak hours congestion-free while peak hours bind at least one line
/// and dispatch the expensive units at buses 3 and 6.
pub fn builtin_case(name: &str) -> Result<CaseData> {
    let case = match name {
        "paper-3bus" => CaseData {
            name: "paper-3bus".into(),
            periods: 1,
            slack_bus: 1,
            buses: vec![Bus { id: 1 }, Bus { id: 2 }, Bus { id: 3 }],
            lines: vec![
                Line {
                    from_bus: 1,
                    to_bus: 2,
                    reactance: 2.0,
                    capacity_mw: 1000.0,
                },
                Line {
                    from_bus: 1,
                    to_bus: 3,
                    reactance: 1.0,
                    capacity_mw: 1000.0,
                },
                Line {
                    from_bus: 2,
                    to_bus: 3,
                    reactance: 1.0,
                    capacity_mw: 25.0,
                },
            ],
            generators: vec![
                Generator {
                    id: "G1".into(),
                    bus: 1,
                    pmax_mw: 200.0,
                    bid_per_mwh: 10.0,
                    emission_t_per_mwh: 0.2,
                },
                Generator {
                    id: "G3".into(),
                    bus: 3,
                    pmax_mw: 100.0,
                    bid_per_mwh: 30.0,
                    emission_t_per_mwh: 0.8,
                },
            ],
            loads: vec![
                LoadProfile {
                    bus: 2,
                    mw: vec![10.0],
                },
                LoadProfile {
                    bus: 3,
                    mw: vec![150.0],
                },
            ],
        },
        "synthetic-6bus-24h" => synthetic_6bus_24h(),
        other => return Err(CarbonError::UnknownBuiltin(other.into())),
    };
    case.validate()?;
    Ok(case)
}

fn synthetic_6bus_24h() -> CaseData {
    // Hourly scaling factors with a morning ramp and an evening peak.
    const FACTORS: [f64; 24] = [
        0.45, 0.42, 0.40, 0.40, 0.42, 0.50, 0.62, 0.75, 0.85, 0.90, 0.92, 0.95, 0.93, 0.90, 0.88,
        0.90, 0.95, 1.00, 0.98, 0.92, 0.80, 0.68, 0.58, 0.50,
    ];
    let profile = |peak: f64| FACTORS.iter().map(|f| f * peak).collect::<Vec<_>>();
    CaseData {
        name: "synthetic-6bus-24h".into(),
        periods: 24,
        slack_bus: 1,
        buses: (1..=6).map(|id| Bus { id }).collect(),
        lines: vec![
            Line {
                from_bus: 1,
                to_bus: 2,
                reactance: 0.20,
                capacity_mw: 90.0,
            },
            Line {
                from_bus: 2,
                to_bus: 3,
                reactance: 0.25,
                capacity_mw: 60.0,
            },
            Line {
                from_bus: 1,
                to_bus: 4,
                reactance: 0.25,
                capacity_mw: 70.0,
            },
            Line {
                from_bus: 4,
                to_bus: 5,
                reactance: 0.30,
                capacity_mw: 60.0,
            },
            Line {
                from_bus: 5,
                to_bus: 6,
                reactance: 0.25,
                capacity_mw: 50.0,
            },
            Line {
                from_bus: 3,
                to_bus: 6,
                reactance: 0.30,
                capacity_mw: 50.0,
            },
            Line {
                from_bus: 2,
                to_bus: 5,
                reactance: 0.20,
                capacity_mw: 70.0,
            },
        ],
        generators: vec![
            Generator {
                id: "G1".into(),
                bus: 1,
                pmax_mw: 250.0,
                bid_per_mwh: 12.0,
                emission_t_per_mwh: 0.25,
            },
            Generator {
                id: "G3".into(),
                bus: 3,
                pmax_mw: 120.0,
                bid_per_mwh: 28.0,
                emission_t_per_mwh: 0.85,
            },
            Generator {
                id: "G6".into(),
                bus: 6,
                pmax_mw: 100.0,
                bid_per_mwh: 35.0,
                emission_t_per_mwh: 0.55,
            },
        ],
        loads: vec![
            LoadProfile {
                bus: 3,
                mw: profile(70.0),
            },
            LoadProfile {
                bus: 4,
                mw: profile(55.0),
            },
            LoadProfile {
                bus: 6,
                mw: profile(65.0),
            },
        ],
    }
}

/// Dense power transfer distribution factor matrix.
///
/// Entry `(l, i)` is the flow change on line `l` (oriented from -> to, MW)
/// per 1 MW injected at bus `i` and withdrawn at the slack bus. The slack
/// column is identically zero.
#[derive(Debug, Clone)]
pub struct PtdfMatrix {
    pub entries: Mat,
    pub slack_bus: BusId,
}

impl PtdfMatrix {
    pub fn entry(&self, line: usize, bus_idx: usize) -> f64 {
        self.entries[(line, bus_idx)]
    }

    /// Line flows for a balanced per-bus injection vector.
    pub fn flows(&self, injections: &[f64]) -> Vec<f64> {
        self.entries.mul_vec(injections)
    }
}

/// Build the PTDF matrix by factorizing the reduced nodal susceptance
/// matrix (slack row/column removed).
pub fn build_ptdf(case: &CaseData) -> Result<PtdfMatrix> {
    let n = case.n_buses();
    let slack = case
        .bus_index(case.slack_bus)
        .ok_or_else(|| CarbonError::Validation("slack bus missing".into()))?;
    let reduced: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let pos: HashMap<usize, usize> = reduced.iter().enumerate().map(|(k, &i)| (i, k)).collect();

    let mut b_red = Mat::zeros(n - 1, n - 1);
    for l in &case.lines {
        let f = case.bus_index(l.from_bus).unwrap();
        let t = case.bus_index(l.to_bus).unwrap();
        let b = 1.0 / l.reactance;
        if let Some(&rf) = pos.get(&f) {
            b_red[(rf, rf)] += b;
        }
        if let Some(&rt) = pos.get(&t) {
            b_red[(rt, rt)] += b;
        }
        if let (Some(&rf), Some(&rt)) = (pos.get(&f), pos.get(&t)) {
            b_red[(rf, rt)] -= b;
            b_red[(rt, rf)] -= b;
        }
    }
    let lu = lu_factor(&b_red).ok_or_else(|| {
        CarbonError::SingularNetwork("reduced susceptance matrix is singular".into())
    })?;

    let mut entries = Mat::zeros(case.lines.len(), n);
    for (li, l) in case.lines.iter().enumerate() {
        let f = case.bus_index(l.from_bus).unwrap();
        let t = case.bus_index(l.to_bus).unwrap();
        let b = 1.0 / l.reactance;
        // Solve B' y = b * (e_from - e_to); by symmetry y_i is the flow
        // sensitivity of this line to an injection at bus i.
        let mut rhs = vec![0.0; n - 1];
        if let Some(&rf) = pos.get(&f) {
            rhs[rf] += b;
        }
        if let Some(&rt) = pos.get(&t) {
            rhs[rt] -= b;
        }
        let y = lu.solve(&rhs);
        for (k, &i) in reduced.iter().enumerate() {
            entries[(li, i)] = y[k];
        }
        // slack column stays exactly zero
    }
    Ok(PtdfMatrix {
        entries,
        slack_bus: case.slack_bus,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force DC flow oracle: solve B' theta = P for the given
    /// injections and read branch flows directly.
    pub fn dc_flow_oracle(case: &CaseData, injections: &[f64]) -> Vec<f64> {
        let n = case.n_buses();
        let slack = case.bus_index(case.slack_bus).unwrap();
        let reduced: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
        let pos: HashMap<usize, usize> =
            reduced.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut b_red = Mat::zeros(n - 1, n - 1);
        for l in &case.lines {
            let f = case.bus_index(l.from_bus).unwrap();
            let t = case.bus_index(l.to_bus).unwrap();
            let b = 1.0 / l.reactance;
            if let Some(&rf) = pos.get(&f) {
                b_red[(rf, rf)] += b;
            }
            if let Some(&rt) = pos.get(&t) {
                b_red[(rt, rt)] += b;
            }
            if let (Some(&rf), Some(&rt)) = (pos.get(&f), pos.get(&t)) {
                b_red[(rf, rt)] -= b;
                b_red[(rt, rf)] -= b;
            }
        }
        let rhs: Vec<f64> = reduced.iter().map(|&i| injections[i]).collect();
        let theta_red = crate::linalg::solve_dense(&b_red, &rhs).unwrap();
        let theta = |i: usize| {
            if i == slack {
                0.0
            } else {
                theta_red[pos[&i]]
            }
        };
        case.lines
            .iter()
            .map(|l| {
                let f = case.bus_index(l.from_bus).unwrap();
                let t = case.bus_index(l.to_bus).unwrap();
                (theta(f) - theta(t)) / l.reactance
            })
            .collect()
    }

    fn paper3() -> CaseData {
        builtin_case("paper-3bus").unwrap()
    }

    #[test]
    fn paper_3bus_parameters() {
        let c = paper3();
        assert_eq!(c.generators.len(), 2);
        assert_eq!(c.lines.len(), 3);
        let g1 = &c.generators[0];
        assert_eq!(g1.pmax_mw, 200.0);
        assert_eq!(g1.emission_t_per_mwh, 0.2);
        let l23 = c
            .lines
            .iter()
            .find(|l| l.from_bus == 2 && l.to_bus == 3)
            .unwrap();
        assert_eq!(l23.capacity_mw, 25.0);
        assert_eq!(c.load_vector(0), vec![0.0, 10.0, 150.0]);
    }

    #[test]
    fn unknown_builtin_rejected() {
        assert!(matches!(
            builtin_case("nope"),
            Err(CarbonError::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn ptdf_matches_dc_flow_oracle() {
        let c = paper3();
        let ptdf = build_ptdf(&c).unwrap();
        // column per unit injection, checked against the oracle
        for i in 0..3 {
            let mut inj = vec![0.0; 3];
            inj[i] = 1.0;
            inj[0] -= 1.0; // withdrawn at slack (bus 1 index 0)
            let oracle = dc_flow_oracle(&c, &inj);
            for l in 0..3 {
                assert!(
                    (ptdf.entry(l, i) - oracle[l]).abs() < 1e-12,
                    "line {l} bus col {i}"
                );
            }
        }
        // row for line 2-3 (index 2): [0, +0.5, -0.25]
        assert!((ptdf.entry(2, 0) - 0.0).abs() < 1e-12);
        assert!((ptdf.entry(2, 1) - 0.5).abs() < 1e-12);
        assert!((ptdf.entry(2, 2) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn ptdf_slack_column_zero() {
        let c = paper3();
        let ptdf = build_ptdf(&c).unwrap();
        for l in 0..c.lines.len() {
            assert_eq!(ptdf.entry(l, 0), 0.0);
        }
    }

    #[test]
    fn paper_3bus_base_flow_at_limit() {
        let c = paper3();
        let ptdf = build_ptdf(&c).unwrap();
        let flows = ptdf.flows(&[130.0, -10.0, -120.0]);
        assert!((flows[2] - 25.0).abs() < 1e-10, "line 2-3 exactly at limit");
        assert!((flows[1] - 95.0).abs() < 1e-10, "line 1-3");
        assert!((flows[0] - 35.0).abs() < 1e-10, "line 1-2");
    }

    #[test]
    fn two_bus_single_line_ptdf() {
        let c = CaseData {
            name: "2bus".into(),
            periods: 1,
            slack_bus: 1,
            buses: vec![Bus { id: 1 }, Bus { id: 2 }],
            lines: vec![Line {
                from_bus: 1,
                to_bus: 2,
                reactance: 1.0,
                capacity_mw: 10.0,
            }],
            generators: vec![Generator {
                id: "G".into(),
                bus: 1,
                pmax_mw: 10.0,
                bid_per_mwh: 1.0,
                emission_t_per_mwh: 0.0,
            }],
            loads: vec![],
        };
        let ptdf = build_ptdf(&c).unwrap();
        assert_eq!(ptdf.entry(0, 0), 0.0);
        assert!((ptdf.entry(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn slack_relabel_preserves_flows() {
        let mut c = paper3();
        let ptdf1 = build_ptdf(&c).unwrap();
        c.slack_bus = 3;
        let ptdf3 = build_ptdf(&c).unwrap();
        let inj = [130.0, -10.0, -120.0];
        let f1 = ptdf1.flows(&inj);
        let f3 = ptdf3.flows(&inj);
        for l in 0..3 {
            assert!((f1[l] - f3[l]).abs() < 1e-10);
        }
        // but individual entries do change
        assert!((ptdf1.entry(2, 1) - ptdf3.entry(2, 1)).abs() > 1e-3);
    }

    #[test]
    fn parse_rejects_zero_reactance() {
        let text = r#"{"name":"bad","periods":1,"slack_bus":1,
            "buses":[{"id":1},{"id":2}],
            "lines":[{"from":1,"to":2,"reactance":0,"capacity_mw":10}],
            "generators":[{"id":"G","bus":1,"pmax_mw":10,"bid_per_mwh":1,"emission_t_per_mwh":0}],
            "loads":[]}"#;
        match parse_case(text) {
            Err(CarbonError::Validation(msg)) => {
                assert!(msg.contains("reactance must be positive"))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_infeasible_capacity() {
        let text = r#"{"name":"bad","periods":1,"slack_bus":1,
            "buses":[{"id":1},{"id":2}],
            "lines":[{"from":1,"to":2,"reactance":1,"capacity_mw":100}],
            "generators":[{"id":"G","bus":1,"pmax_mw":10,"bid_per_mwh":1,"emission_t_per_mwh":0}],
            "loads":[{"bus":2,"mw":[50]}]}"#;
        match parse_case(text) {
            Err(CarbonError::Validation(msg)) => assert!(msg.contains("infeasible capacity")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_unknown_keys() {
        let text = r#"{"name":"bad","periods":1,"slack_bus":1,"voltage":500,
            "buses":[{"id":1}],"lines":[],"generators":[],"loads":[]}"#;
        assert!(matches!(parse_case(text), Err(CarbonError::Parse(_))));
    }

    #[test]
    fn parse_rejects_disconnected_network() {
        let text = r#"{"name":"bad","periods":1,"slack_bus":1,
            "buses":[{"id":1},{"id":2},{"id":3}],
            "lines":[{"from":1,"to":2,"reactance":1,"capacity_mw":10}],
            "generators":[{"id":"G","bus":1,"pmax_mw":10,"bid_per_mwh":1,"emission_t_per_mwh":0}],
            "loads":[]}"#;
        match parse_case(text) {
            Err(CarbonError::Validation(msg)) => assert!(msg.contains("not connected")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }
}
