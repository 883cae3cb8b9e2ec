//! Nuisance fitting, the bridge summaries η₁, h̄, η₂ and the
//! misspecification injectors.

use proximal_mediation::dgp::{sample, SamplerConfig};
use proximal_mediation::model::Record;
use proximal_mediation::nuisance::{
    fit_nuisances, NuisanceMode, NuisanceSet, NuisanceTarget, PropensityModel, Provenance, LAPLACE,
};
use proximal_mediation::oracle::solve_outcome_bridge;
use proximal_mediation::{fixtures, to_population, BridgeEval, Dataset, PopulationJoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn d1() -> (proximal_mediation::ScmSpec, PopulationJoint) {
    let spec = fixtures::load_discrete("D1").unwrap();
    let pop = to_population(&spec).unwrap();
    (spec, pop)
}

fn random_h(seed: u64) -> impl Fn(f64, usize, f64) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
    move |w: f64, a: usize, x: f64| vals[(x as usize) * 4 + a * 2 + w as usize]
}

#[test]
fn weighted_population_recovers_the_tables_up_to_smoothing() {
    let (spec, pop) = d1();
    let mass = 1e6;
    let data = Dataset::from_population(&pop, mass);
    let nu = fit_nuisances(&data, &NuisanceMode::Tabular(spec.space.clone())).unwrap();
    assert_eq!(nu.propensity_provenance, Provenance::Empirical);
    for x in 0..2 {
        let bound = LAPLACE / (pop.p_x(x) * mass + LAPLACE * 2.0);
        for a in 0..2 {
            assert!((nu.propensity(a, x as f64) - pop.p_a_given_x(a, x)).abs() <= bound);
            let bound = LAPLACE / (pop.p_xa(x, a) * mass + LAPLACE * 2.0);
            for w in 0..2 {
                let p = nu.proxy_prob(w, a, x).unwrap();
                assert!((p - pop.p_w_given_ax(w, a, x)).abs() <= bound);
            }
        }
    }
}

#[test]
fn sampled_tables_are_within_five_points() {
    let (spec, pop) = d1();
    let data = sample(&fixtures::load("D1").unwrap(), &SamplerConfig::new(21, 5000)).unwrap();
    let nu = fit_nuisances(&data, &NuisanceMode::Tabular(spec.space.clone())).unwrap();
    for x in 0..2 {
        for a in 0..2 {
            assert!((nu.propensity(a, x as f64) - pop.p_a_given_x(a, x)).abs() < 0.05);
            for w in 0..2 {
                assert!((nu.proxy_prob(w, a, x).unwrap() - pop.p_w_given_ax(w, a, x)).abs() < 0.05);
            }
        }
    }
}

#[test]
fn single_arm_data_is_rejected() {
    let spec = fixtures::load_discrete("D1").unwrap();
    let mut data = sample(&fixtures::load("D1").unwrap(), &SamplerConfig::new(1, 400)).unwrap();
    data.records.retain(|r| r.a == 0);
    assert!(fit_nuisances(&data, &NuisanceMode::Tabular(spec.space)).is_err());
}

#[test]
fn extreme_propensities_are_clipped() {
    let spec = fixtures::load_discrete("D1").unwrap();
    let rec = |x: f64, a: usize| Record { x, a, z: 0.0, w: 0.0, y: 0.0 };
    let mut records: Vec<Record> = (0..2000).map(|_| rec(0.0, 1)).collect();
    records.push(rec(0.0, 0));
    records.extend((0..50).map(|i| rec(1.0, i % 2)));
    let data = Dataset::new(records, Default::default());
    let nu = fit_nuisances(&data, &NuisanceMode::Tabular(spec.space)).unwrap();
    assert!(nu.clipped >= 1);
    for a in 0..2 {
        let p = nu.propensity(a, 0.0);
        assert!((0.01 - 1e-12..=0.99 + 1e-12).contains(&p), "{p}");
    }
}

#[test]
fn eta1_identities() {
    let (_, pop) = d1();
    let nu = NuisanceSet::exact(&pop);
    let c = |_: f64, _: usize, _: f64| 1.5;
    let indicator = |w: f64, _: usize, _: f64| if w == 0.0 { 1.0 } else { 0.0 };
    let h = solve_outcome_bridge(&pop).unwrap();
    for x in 0..2 {
        for a in 0..2 {
            for ap in 0..2 {
                assert!((nu.eta1(&c, x as f64, ap, a) - 1.5).abs() < 1e-12);
                assert!((nu.eta1(&indicator, x as f64, ap, a) - pop.p_w_given_ax(0, a, x)).abs() < 1e-12);
                let direct: f64 = (0..2).map(|w| h.value(w, ap, x) * pop.p_w_given_ax(w, a, x)).sum();
                assert!((nu.eta1(&h, x as f64, ap, a) - direct).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn hbar_averages_slices_under_a_balanced_propensity() {
    let (_, pop) = d1();
    let mut nu = NuisanceSet::exact(&pop);
    if let PropensityModel::Table(t) = &mut nu.propensity {
        t.data_mut().iter_mut().for_each(|p| *p = 0.5);
    }
    let h = random_h(3);
    for x in 0..2 {
        for w in 0..2 {
            let (xf, wf) = (x as f64, w as f64);
            let avg = 0.5 * (h.eval(wf, 0, xf) + h.eval(wf, 1, xf));
            assert!((nu.hbar(&h, wf, xf) - avg).abs() < 1e-12);
        }
    }
}

#[test]
fn eta2_routes_agree() {
    let (_, pop) = d1();
    let exact = NuisanceSet::exact(&pop);
    let data = sample(&fixtures::load("D1").unwrap(), &SamplerConfig::new(2, 300)).unwrap();
    let fitted = fit_nuisances(&data, &NuisanceMode::Tabular(fixtures::load_discrete("D1").unwrap().space)).unwrap();
    let h0 = solve_outcome_bridge(&pop).unwrap();
    let c = |_: f64, _: usize, _: f64| -0.25;
    for nu in [&exact, &fitted] {
        for seed in 0..5 {
            let h = random_h(seed);
            for x in 0..2 {
                let xf = x as f64;
                for a in 0..2 {
                    let e2 = nu.eta2(&h, xf, a);
                    let via_eta1: f64 = (0..2).map(|ap| nu.eta1(&h, xf, ap, a) * nu.propensity(ap, xf)).sum();
                    assert!((e2 - via_eta1).abs() < 1e-12);
                    assert!((e2 - nu.eta2_via_hbar(&h, xf, a)).abs() < 1e-12);
                    assert!((nu.eta2(&h0, xf, a) - nu.eta2_via_hbar(&h0, xf, a)).abs() < 1e-12);
                    assert!((nu.eta2(&c, xf, a) + 0.25).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn injectors_tag_and_change_the_laws() {
    let (_, pop) = d1();
    let nu = NuisanceSet::exact(&pop);

    let flat = nu.with_constant_propensity().unwrap();
    assert!(matches!(flat.propensity_provenance, Provenance::Misspecified(_)));
    assert_eq!(flat.proxy_provenance, Provenance::Exact);
    assert!((flat.propensity(1, 0.0) - flat.propensity(1, 1.0)).abs() < 1e-12);

    let blind = nu.with_w_law_ignoring_a().unwrap();
    assert!(matches!(blind.proxy_provenance, Provenance::Misspecified(_)));
    for x in 0..2 {
        for w in 0..2 {
            assert!((blind.proxy_prob(w, 0, x).unwrap() - blind.proxy_prob(w, 1, x).unwrap()).abs() < 1e-12);
        }
    }

    for target in [NuisanceTarget::Propensity, NuisanceTarget::ProxyLaw] {
        let bad = nu.corrupted(target).unwrap();
        let mut moved = 0.0f64;
        for x in 0..2 {
            let xf = x as f64;
            let s: f64 = (0..2).map(|a| bad.propensity(a, xf)).sum();
            assert!((s - 1.0).abs() < 1e-9);
            for a in 0..2 {
                moved = moved.max((bad.propensity(a, xf) - nu.propensity(a, xf)).abs());
                let s: f64 = (0..2).map(|w| bad.proxy_prob(w, a, x).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-9);
                for w in 0..2 {
                    moved = moved.max((bad.proxy_prob(w, a, x).unwrap() - nu.proxy_prob(w, a, x).unwrap()).abs());
                }
            }
        }
        assert!(moved > 0.01, "{target:?}");
    }
}

#[test]
fn continuous_nuisances_track_the_gaussian_truth() {
    let g = gauss1();
    let data = sample(&fixtures::load("GAUSS1").unwrap(), &SamplerConfig::new(5, 5000)).unwrap();
    let nu = fit_nuisances(&data, &NuisanceMode::Continuous).unwrap();
    for x in [-1.0, 0.0, 1.0] {
        let p = nu.propensity(1, x);
        assert!((p - g.propensity.p_treated(x)).abs() < 0.05, "x={x}: {p}");
    }
    // E[h(W) | A = a, X = x] with h = w: α a + γ x
    let h = |w: f64, _: usize, _: f64| w;
    for a in 0..2 {
        for x in [-0.5, 0.0, 0.5] {
            let e = nu.eta1(&h, x, 0, a);
            let truth = g.alpha * a as f64 + g.gamma * x;
            assert!((e - truth).abs() < 0.25, "a={a} x={x}: {e} vs {truth}");
        }
    }
}

fn gauss1() -> proximal_mediation::GaussianScmSpec {
    match fixtures::load("GAUSS1").unwrap() {
        proximal_mediation::AnySpec::Gaussian(g) => g,
        proximal_mediation::AnySpec::Discrete(_) => unreachable!(),
    }
}
