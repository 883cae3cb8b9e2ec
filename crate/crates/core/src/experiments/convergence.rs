//! Bridge convergence: error of ĥ (and q̂ for discrete specs) against the
//! true bridge as n grows.

use std::time::Instant;

use rayon::prelude::*;

use super::{mean_and_se, BridgeChoice, StudyConfig, StudyMode, StudyReport, StudyRow};
use crate::bridge_fn::BridgeEval;
use crate::bridges::{fit_h_minimax, fit_h_tabular, fit_q_minimax, fit_q_tabular};
use crate::dgp::{sample, SamplerConfig};
use crate::error::Result;
use crate::estimators::BridgeMethod;
use crate::model::{to_population, AnySpec, Dataset};
use crate::nuisance::fit_nuisances;
use crate::oracle::{solve_outcome_bridge, solve_treatment_bridge};

/// Per-replication outcome at one n: (mean error, MSE, seconds).
type Fit = Option<(f64, f64, f64)>;

fn errors(data: &Dataset, fitted: &dyn BridgeEval, truth: &dyn BridgeEval, use_z: bool) -> (f64, f64) {
    let n = data.len() as f64;
    let (mut bias, mut sq) = (0.0, 0.0);
    for r in &data.records {
        let p = if use_z { r.z } else { r.w };
        let e = fitted.eval(p, r.a, r.x) - truth.eval(p, r.a, r.x);
        bias += e;
        sq += e * e;
    }
    (bias / n, sq / n)
}

/// Fits on nested prefixes of one sample per replication, so every n in
/// the ladder shares its records with the larger ones (paired seeds).
/// Errors are measured at the training points.
pub fn run_convergence_sweep(cfg: &StudyConfig) -> Result<StudyReport> {
    let spec = cfg.spec.resolve()?;
    cfg.validate(&spec)?;
    let n_max = *cfg.sample_sizes.last().expect("validated non-empty");
    let plan = cfg.fit_plan(&spec, Default::default());

    let (h_true, q_true): (Box<dyn BridgeEval + Sync>, Option<Box<dyn BridgeEval + Sync>>) = match &spec {
        AnySpec::Discrete(s) => {
            let pop = to_population(s)?;
            (
                Box::new(solve_outcome_bridge(&pop)?),
                Some(Box::new(solve_treatment_bridge(&pop, cfg.a)?)),
            )
        }
        AnySpec::Gaussian(g) => {
            let g = g.clone();
            (Box::new(move |w: f64, a: usize, x: f64| g.outcome_bridge(w, a, x)), None)
        }
    };

    // reps[r][k] = (h fit, q fit) at sample_sizes[k]
    let reps: Vec<Vec<(Fit, Fit)>> = (0..cfg.replications as u64)
        .into_par_iter()
        .map(|r| {
            let full = sample(&spec, &SamplerConfig::new(cfg.seed, n_max).with_stream(r))?;
            Ok(cfg
                .sample_sizes
                .iter()
                .map(|&n| {
                    let data = full.subset(&(0..n).collect::<Vec<_>>());
                    let start = Instant::now();
                    let h_fit = match &plan.bridges {
                        BridgeMethod::Tabular(space) => fit_h_tabular(&data, space)
                            .ok()
                            .map(|h| errors(&data, &h, h_true.as_ref(), false)),
                        BridgeMethod::Kernel(k) => fit_h_minimax(&data, k)
                            .ok()
                            .map(|h| errors(&data, &h, h_true.as_ref(), false)),
                    }
                    .map(|(b, m)| (b, m, start.elapsed().as_secs_f64()));
                    let q_fit = q_true.as_ref().and_then(|qt| {
                        let start = Instant::now();
                        let fitted = match &plan.bridges {
                            BridgeMethod::Tabular(space) => fit_q_tabular(&data, space, cfg.a)
                                .ok()
                                .map(|q| errors(&data, &q, qt.as_ref(), true)),
                            BridgeMethod::Kernel(k) => fit_nuisances(&data, &plan.nuisance)
                                .and_then(|nu| fit_q_minimax(&data, k, &nu, cfg.a))
                                .ok()
                                .map(|q| errors(&data, &q, qt.as_ref(), true)),
                        };
                        fitted.map(|(b, m)| (b, m, start.elapsed().as_secs_f64()))
                    });
                    (h_fit, q_fit)
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let method = match cfg.bridges {
        BridgeChoice::Tabular => "tabular",
        BridgeChoice::Kernel => "kernel",
    };
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let bridges: &[(&str, bool)] = if q_true.is_some() { &[("h", false), ("q", true)] } else { &[("h", false)] };
    for &(name, is_q) in bridges {
        let mut curve = Vec::new();
        for (k, &n) in cfg.sample_sizes.iter().enumerate() {
            let fits: Vec<(f64, f64, f64)> =
                reps.iter().filter_map(|r| if is_q { r[k].1 } else { r[k].0 }).collect();
            let mses: Vec<f64> = fits.iter().map(|f| f.1).collect();
            let (mse, mc_se) = if mses.is_empty() { (f64::NAN, None) } else { mean_and_se(&mses) };
            let bias = fits.iter().map(|f| f.0).sum::<f64>() / fits.len().max(1) as f64;
            curve.push((n as f64, mse));
            rows.push(StudyRow {
                estimand: name.into(),
                strategy: method.into(),
                pattern: "none".into(),
                n: Some(n),
                target: 0.0,
                mean_estimate: bias,
                mean_bias: bias,
                mc_se,
                if_se_mean: None,
                coverage: None,
                mse: Some(mse),
                replications: fits.len(),
                failures: cfg.replications - fits.len(),
                expected_unbiased: true,
                runtime_s: fits.iter().map(|f| f.2).sum(),
            });
        }
        if let Some(s) = loglog_slope(&curve) {
            slopes.push((name.to_string(), s));
        }
    }
    Ok(StudyReport {
        kind: cfg.kind,
        mode: StudyMode::Sampling,
        spec: spec.name().to_string(),
        seed: cfg.seed,
        rows,
        slopes,
    })
}

/// Least-squares slope of ln(mse) on ln(n); needs two or more positive points.
pub fn loglog_slope(curve: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|(_, m)| *m > 0.0 && m.is_finite())
        .map(|(n, m)| (n.ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let curve: Vec<(f64, f64)> = [100.0, 1000.0, 10000.0].iter().map(|&n: &f64| (n, 3.0 / n)).collect();
        assert!((loglog_slope(&curve).unwrap() + 1.0).abs() < 1e-12);
        assert!(loglog_slope(&curve[..1]).is_none());
    }

    #[test]
    fn tabular_sweep_is_deterministic() {
        let cfg = StudyConfig::from_json_str(
            r#"{"kind": "convergence", "spec": "D1", "sample_sizes": [400, 1600], "replications": 4, "seed": 3}"#,
        )
        .unwrap();
        let a = run_convergence_sweep(&cfg).unwrap();
        let b = run_convergence_sweep(&cfg).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        assert_eq!(a.rows.len(), 4);
    }
}
