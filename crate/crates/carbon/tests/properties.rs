//! Property-based invariants on randomized cases.

use carbon::clearing::clear_case;
use carbon::emissions::{compute_lmce, EmissionVector};
use carbon::grid::build_ptdf;
use carbon::kkt::{assemble_kkt_lp, solve_sensitivity, DEFAULT_SVD_TOL};
use carbon::report::fmt_g;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::random_case;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any single-bus injection/withdrawal pair moves a line flow by at
    /// most the full transfer, so PTDF entry differences lie in [-1, 1].
    #[test]
    fn ptdf_pair_differences_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng);
        prop_assume!(case.validate().is_ok());
        let ptdf = build_ptdf(&case).unwrap();
        let (nl, nb) = (case.lines.len(), case.n_buses());
        for l in 0..nl {
            for i in 0..nb {
                for j in 0..nb {
                    let d = ptdf.entries[(l, i)] - ptdf.entries[(l, j)];
                    prop_assert!(d.abs() <= 1.0 + 1e-9, "line {l}: {d}");
                }
            }
        }
    }

    /// With line limits relaxed the LP is a pure merit order: one uniform
    /// price and one uniform LMCE across buses.
    #[test]
    fn uncongested_lmce_is_uniform(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut case = random_case(&mut rng);
        for l in case.lines.iter_mut() {
            l.capacity_mw = 1e6;
        }
        prop_assume!(case.validate().is_ok());
        let ptdf = build_ptdf(&case).unwrap();
        let (prob, sol) = clear_case(&case, &ptdf).unwrap();
        let sys = assemble_kkt_lp(&prob, &sol).unwrap();
        let sens = solve_sensitivity(&sys, DEFAULT_SVD_TOL);
        let rho = compute_lmce(&EmissionVector::from_case(&case), &sens);
        for b in 1..case.n_buses() {
            prop_assert!(
                (rho.value[0][b] - rho.value[0][0]).abs() < 1e-8,
                "bus {b}: {} vs {}", rho.value[0][b], rho.value[0][0]
            );
        }
    }

    /// Strong duality on cleared instances: the primal objective equals
    /// pi * demand plus the bound payments.
    #[test]
    fn strong_duality_on_random_cases(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng);
        prop_assume!(case.validate().is_ok());
        let ptdf = build_ptdf(&case).unwrap();
        let Ok((prob, sol)) = clear_case(&case, &ptdf) else {
            return Ok(()); // line limits made the instance infeasible
        };
        let p = &sol.periods[0];
        let pp = &prob.periods[0];
        let mut dual = p.pi * pp.balance_rhs;
        for (r, row) in pp.rows.iter().enumerate() {
            dual += p.phi[r] * row.lower - p.psi[r] * row.upper;
        }
        let scale = p.objective.abs().max(1.0);
        prop_assert!(
            (p.objective - dual).abs() < 1e-6 * scale,
            "primal {} dual {}", p.objective, dual
        );
    }

    /// fmt_g keeps six significant digits: parsing the output recovers
    /// the value to a relative error below 1e-5.
    #[test]
    fn fmt_g_preserves_six_digits(x in -1e12f64..1e12) {
        let s = fmt_g(x);
        let back: f64 = s.parse().unwrap();
        let scale = x.abs().max(1e-300);
        prop_assert!(
            (back - x).abs() / scale < 1e-5,
            "{x} -> {s} -> {back}"
        );
    }
}
