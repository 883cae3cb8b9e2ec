//! Sampler reproducibility and agreement with the exact laws.

use proximal_mediation::dgp::{random_valid_scm, sample, sample_gaussian, SamplerConfig};
use proximal_mediation::model::{mediator_joint, AnySpec};
use proximal_mediation::oracle::{check_completeness, ProxySide};
use proximal_mediation::{fixtures, to_population, validate_spec, FiniteSpace, GaussianScmSpec, ModelKind};

fn gauss1() -> GaussianScmSpec {
    match fixtures::load("GAUSS1").unwrap() {
        AnySpec::Gaussian(g) => g,
        AnySpec::Discrete(_) => unreachable!(),
    }
}

#[test]
fn same_seed_same_sample() {
    for name in fixtures::NAMES {
        let spec = fixtures::load(name).unwrap();
        for n in [1, 500] {
            let cfg = SamplerConfig::new(7, n);
            let a = sample(&spec, &cfg).unwrap();
            let b = sample(&spec, &cfg).unwrap();
            assert_eq!(a, b, "{name} n={n}");
            assert_eq!(a.len(), n);
        }
    }
}

#[test]
fn streams_and_seeds_give_different_samples() {
    let spec = fixtures::load("GAUSS1").unwrap();
    let base = sample(&spec, &SamplerConfig::new(7, 50)).unwrap();
    let other_stream = sample(&spec, &SamplerConfig::new(7, 50).with_stream(1)).unwrap();
    let other_seed = sample(&spec, &SamplerConfig::new(8, 50)).unwrap();
    assert_ne!(base.records, other_stream.records);
    assert_ne!(base.records, other_seed.records);
    assert_eq!(base.meta.seed, Some(7));
}

#[test]
fn discrete_cell_frequencies_match_the_population() {
    let spec = fixtures::load("D1").unwrap();
    let pop = to_population(&fixtures::load_discrete("D1").unwrap()).unwrap();
    let n = 1_000_000;
    let data = sample(&spec, &SamplerConfig::new(11, n)).unwrap();
    let mut counts = [[[[0usize; 2]; 2]; 2]; 2];
    for r in &data.records {
        counts[r.x as usize][r.a][r.z as usize][r.w as usize] += 1;
        assert!(r.y == 0.0 || r.y == 1.0);
    }
    for x in 0..2 {
        for a in 0..2 {
            for z in 0..2 {
                for w in 0..2 {
                    let p = pop.cell(x, a, z, w);
                    let sd = (p * (1.0 - p) / n as f64).sqrt();
                    let f = counts[x][a][z][w] as f64 / n as f64;
                    assert!((f - p).abs() < 4.0 * sd, "cell {x}{a}{z}{w}: {f} vs {p}");
                }
            }
        }
    }
}

/// E[f(X)] for X ~ N(0, σ²) by the trapezoid rule on ±12σ.
fn normal_expectation(sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
    let steps = 200_000;
    let lo = -12.0 * sigma;
    let dx = 24.0 * sigma / steps as f64;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    (0..=steps)
        .map(|i| {
            let x = lo + i as f64 * dx;
            let wgt = if i == 0 || i == steps { 0.5 } else { 1.0 };
            wgt * f(x) * norm * (-0.5 * (x / sigma).powi(2)).exp() * dx
        })
        .sum()
}

/// Sample mean of `vals` and its standard error.
fn mean_se(vals: &[f64]) -> (f64, f64) {
    let n = vals.len() as f64;
    let m = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn gaussian_moments_match_closed_forms() {
    let g = gauss1();
    let n = 200_000;
    let data = sample_gaussian(&g, &SamplerConfig::new(3, n)).unwrap();
    let pi = |x: f64| g.propensity.p_treated(x);
    let p_a = normal_expectation(g.sigma_x, pi);
    let x_pi = normal_expectation(g.sigma_x, |x| x * pi(x));
    let mean_m = g.alpha * p_a;
    let var_m = g.alpha.powi(2) * p_a * (1.0 - p_a)
        + g.gamma.powi(2) * g.sigma_x.powi(2)
        + g.sigma_m.powi(2)
        + 2.0 * g.alpha * g.gamma * x_pi;
    let col = |f: &dyn Fn(&proximal_mediation::model::Record) -> f64| -> Vec<f64> {
        data.records.iter().map(f).collect()
    };
    let xs = col(&|r| r.x);
    let zs = col(&|r| r.z);
    let ws = col(&|r| r.w);
    let mx = mean_se(&xs).0;
    let mz = mean_se(&zs).0;
    let mw = mean_se(&ws).0;
    let checks: Vec<(&str, Vec<f64>, f64)> = vec![
        ("E[X]", xs.clone(), 0.0),
        ("E[A]", col(&|r| r.a as f64), p_a),
        ("E[Z]", zs.clone(), mean_m),
        ("E[W]", ws.clone(), mean_m),
        ("E[Y]", col(&|r| r.y), g.b * mean_m + g.c * p_a),
        ("Cov(X,W)", xs.iter().zip(&ws).map(|(x, w)| (x - mx) * (w - mw)).collect(), g.alpha * x_pi + g.gamma * g.sigma_x.powi(2)),
        ("Cov(Z,W)", zs.iter().zip(&ws).map(|(z, w)| (z - mz) * (w - mw)).collect(), var_m),
        ("Var(W)", ws.iter().map(|w| (w - mw).powi(2)).collect(), var_m + g.sigma_w.powi(2)),
    ];
    for (label, vals, expect) in checks {
        let (m, se) = mean_se(&vals);
        assert!((m - expect).abs() < 5.0 * se, "{label}: {m} vs {expect} (se {se})");
    }
}

#[test]
fn random_specs_are_valid_and_complete() {
    let ternary = FiniteSpace {
        m_levels: 3,
        z_levels: 3,
        w_levels: 3,
        ..FiniteSpace::binary()
    };
    for space in [FiniteSpace::binary(), ternary] {
        for kind in [ModelKind::Mediation, ModelKind::FrontDoor, ModelKind::GeneralizedFrontDoor] {
            for seed in 0..10 {
                let s = random_valid_scm(&space, kind, seed).unwrap();
                assert!(validate_spec(&s).passed(), "{kind:?} seed {seed}");
                let full = mediator_joint(&s).unwrap();
                assert!(check_completeness(&full, ProxySide::ZSide).complete);
                assert!(check_completeness(&full, ProxySide::WSide).complete);
                assert_eq!(s, random_valid_scm(&space, kind, seed).unwrap());
            }
        }
    }
}

#[test]
fn random_spec_rejects_proxies_coarser_than_the_mediator() {
    let space = FiniteSpace {
        m_levels: 3,
        z_levels: 2,
        w_levels: 3,
        ..FiniteSpace::binary()
    };
    assert!(random_valid_scm(&space, ModelKind::Mediation, 0).is_err());
}
