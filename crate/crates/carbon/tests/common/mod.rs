//! Shared helpers for the integration suites.

use carbon::grid::{Bus, CaseData, Generator, Line, LoadProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random connected single-period case: 3-6 buses, spanning tree plus up
/// to two chords, 2-4 generators, total load well inside total capacity.
/// Line limits may still render an instance infeasible; callers skip
/// those.
pub fn random_case(rng: &mut ChaCha8Rng) -> CaseData {
    let n_buses = rng.gen_range(3..=6usize);
    let n_gens = rng.gen_range(2..=4usize);
    let buses: Vec<Bus> = (1..=n_buses as i64).map(|id| Bus { id }).collect();
    let mut lines = Vec::new();
    for b in 2..=n_buses as i64 {
        let other = rng.gen_range(1..b);
        lines.push(Line {
            from_bus: other,
            to_bus: b,
            reactance: rng.gen_range(0.1..1.0),
            capacity_mw: rng.gen_range(40.0..120.0),
        });
    }
    for _ in 0..rng.gen_range(0..=2usize) {
        let a = rng.gen_range(1..=n_buses as i64);
        let b = rng.gen_range(1..=n_buses as i64);
        if a != b
            && !lines
                .iter()
                .any(|l| (l.from_bus == a && l.to_bus == b) || (l.from_bus == b && l.to_bus == a))
        {
            lines.push(Line {
                from_bus: a,
                to_bus: b,
                reactance: rng.gen_range(0.1..1.0),
                capacity_mw: rng.gen_range(40.0..120.0),
            });
        }
    }
    let generators: Vec<Generator> = (0..n_gens)
        .map(|g| Generator {
            id: format!("G{g}"),
            bus: rng.gen_range(1..=n_buses as i64),
            pmax_mw: rng.gen_range(50.0..150.0),
            bid_per_mwh: rng.gen_range(5.0..50.0),
            emission_t_per_mwh: rng.gen_range(0.0..1.0),
        })
        .collect();
    let total_cap: f64 = generators.iter().map(|g| g.pmax_mw).sum();
    let n_load_buses = rng.gen_range(1..=n_buses);
    let mut weights = vec![0.0; n_load_buses];
    for w in weights.iter_mut() {
        *w = rng.gen_range(0.2..1.0);
    }
    let wsum: f64 = weights.iter().sum();
    let total_load = rng.gen_range(0.2..0.6) * total_cap;
    let loads = weights
        .iter()
        .enumerate()
        .map(|(i, w)| LoadProfile {
            bus: (i + 1) as i64,
            mw: vec![total_load * w / wsum],
        })
        .collect();
    CaseData {
        name: "random".into(),
        periods: 1,
        slack_bus: 1,
        buses,
        lines,
        generators,
        loads,
    }
}
