//! Randomized invariants over generated specifications.

mod common;

use proptest::prelude::*;

use proximal_mediation::dgp::random_valid_scm;
use proximal_mediation::estimators::Misspecification;
use proximal_mediation::io::to_json_string;
use proximal_mediation::nuisance::NuisanceSet;
use proximal_mediation::oracle::{population_psi_via_h, population_psi_via_q, solve_outcome_bridge, solve_treatment_bridge};
use proximal_mediation::{to_population, true_estimands, BridgeFn, FiniteSpace, ModelKind};

fn kind(k: u8) -> ModelKind {
    [ModelKind::Mediation, ModelKind::FrontDoor, ModelKind::GeneralizedFrontDoor][k as usize % 3]
}

fn space(m: usize, extra_z: usize, extra_w: usize) -> FiniteSpace {
    FiniteSpace {
        m_levels: m,
        z_levels: m + extra_z,
        w_levels: m + extra_w,
        ..FiniteSpace::binary()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn population_is_a_distribution(seed in 0u64..10_000, k in 0u8..3, m in 2usize..4, ez in 0usize..2, ew in 0usize..2) {
        let s = random_valid_scm(&space(m, ez, ew), kind(k), seed).unwrap();
        let pop = to_population(&s).unwrap();
        let [nx, na, nz, nw] = pop.dims();
        let mut total = 0.0;
        for x in 0..nx {
            for a in 0..na {
                for z in 0..nz {
                    for w in 0..nw {
                        let p = pop.cell(x, a, z, w);
                        prop_assert!(p >= 0.0);
                        total += p;
                    }
                }
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identified_components_agree_with_brute_force(seed in 0u64..10_000, k in 0u8..3, m in 2usize..4, ez in 0usize..2) {
        let s = random_valid_scm(&space(m, ez, ez), kind(k), seed).unwrap();
        let brute = common::BruteSpec::from_json(&serde_json::to_string(&s.to_json()).unwrap()).estimands(1, 0);
        let truth = true_estimands(&s, 1, 0);
        let pop = to_population(&s).unwrap();
        let h = solve_outcome_bridge(&pop).unwrap();
        let q = solve_treatment_bridge(&pop, 1).unwrap();
        prop_assert!(h.exists() && q.exists());
        let via_h = population_psi_via_h(&pop, &h, 1, 0);
        let via_q = population_psi_via_q(&pop, &q, 1, 0).unwrap();
        for i in 0..3 {
            prop_assert!((truth.get(i) - brute[i]).abs() < 1e-10);
        }
        for (i, ok) in s.model_kind.identified().into_iter().enumerate() {
            if ok {
                prop_assert!((via_h.get(i) - brute[i]).abs() < 1e-8, "ψ{} via h", i + 1);
                prop_assert!((via_q.get(i) - brute[i]).abs() < 1e-8, "ψ{} via q", i + 1);
            }
        }
    }

    #[test]
    fn corruption_keeps_laws_normalized(seed in 0u64..10_000, flags in 0u8..16) {
        let s = random_valid_scm(&FiniteSpace::binary(), ModelKind::Mediation, seed).unwrap();
        let pop = to_population(&s).unwrap();
        let pattern = Misspecification::all()[flags as usize];
        let h = BridgeFn::Tabular(solve_outcome_bridge(&pop).unwrap());
        let q = BridgeFn::Tabular(solve_treatment_bridge(&pop, 1).unwrap());
        let (_, _, nu) = pattern.apply(h, q, NuisanceSet::exact(&pop), 0).unwrap();
        for x in 0..2 {
            let xf = x as f64;
            prop_assert!(((0..2).map(|a| nu.propensity(a, xf)).sum::<f64>() - 1.0).abs() < 1e-9);
            for a in 0..2 {
                let p = nu.propensity(a, xf);
                prop_assert!(p > 0.0 && p < 1.0);
                prop_assert!(((0..2).map(|w| nu.proxy_prob(w, a, x).unwrap()).sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn json_floats_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let text = to_json_string(&v).unwrap();
        let back: f64 = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits());
    }
}
