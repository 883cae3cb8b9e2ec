//! Robustness grids and convergence sweeps through the study harness.

use proximal_mediation::dgp::{sample, SamplerConfig};
use proximal_mediation::experiments::{run_study, StudyConfig, StudyRow};
use proximal_mediation::{fixtures, AnySpec, Error};

fn study(json: &str) -> proximal_mediation::experiments::StudyReport {
    run_study(&StudyConfig::from_json_str(json).unwrap()).unwrap()
}

fn row<'a>(rows: &'a [StudyRow], estimand: &str, strategy: &str, pattern: &str) -> &'a StudyRow {
    rows.iter()
        .find(|r| r.estimand == estimand && r.strategy == strategy && r.pattern == pattern)
        .unwrap_or_else(|| panic!("no row {estimand}/{strategy}/{pattern}"))
}

#[test]
fn psi1_survives_corrupted_q_and_proxy_law() {
    let report = study(r#"{"kind": "robustness", "spec": "D1", "estimands": ["psi1"], "patterns": [["q", "pw"]]}"#);
    assert_eq!(report.rows.len(), 5);
    // {h, p(a|x)} is intact
    let mr = row(&report.rows, "psi1", "s5_mr", "q+pw");
    assert!(mr.expected_unbiased);
    assert!(mr.mean_bias.abs() < 1e-8, "{}", mr.mean_bias);
    let s3 = row(&report.rows, "psi1", "s3_ha", "q+pw");
    assert!(s3.expected_unbiased && s3.mean_bias.abs() < 1e-8);
    for s in ["s1_hw", "s2_qa", "s4_hqa"] {
        let r = row(&report.rows, "psi1", s, "q+pw");
        assert!(!r.expected_unbiased);
        assert!(r.mean_bias.abs() > 1e-3, "{s}: {}", r.mean_bias);
    }
}

#[test]
fn psi2_breaks_when_both_bridges_are_wrong() {
    let report = study(r#"{"kind": "robustness", "spec": "F1", "estimands": ["psi2"], "strategies": ["s5_mr"], "patterns": [["h", "q"]]}"#);
    let mr = row(&report.rows, "psi2", "s5_mr", "h+q");
    assert!(!mr.expected_unbiased);
    assert!(mr.mean_bias.abs() > 1e-3, "{}", mr.mean_bias);
}

#[test]
fn nothing_corrupted_means_nothing_biased() {
    for (spec, estimand) in [("D1", "psi1"), ("F1", "psi2"), ("G1", "psi3")] {
        let report = study(&format!(
            r#"{{"kind": "robustness", "spec": "{spec}", "estimands": ["{estimand}"], "patterns": [[]]}}"#
        ));
        assert_eq!(report.rows.len(), 5);
        for r in &report.rows {
            assert_eq!(r.pattern, "none");
            assert!(r.expected_unbiased);
            assert!(r.mean_bias.abs() < 1e-8, "{spec} {}: {}", r.strategy, r.mean_bias);
        }
    }
}

#[test]
fn full_grid_matches_expectations() {
    let report = study(r#"{"kind": "robustness", "spec": "F1", "estimands": ["psi2", "psi3"], "strategies": ["s5_mr"]}"#);
    assert_eq!(report.rows.len(), 32);
    for r in &report.rows {
        if r.expected_unbiased {
            assert!(r.mean_bias.abs() < 1e-8, "{} {}: {}", r.estimand, r.pattern, r.mean_bias);
        }
    }
}

#[test]
fn sampling_studies_are_reproducible() {
    let cfg = r#"{"kind": "robustness", "spec": "D1", "mode": "sampling", "estimands": ["psi1"],
                  "strategies": ["s1_hw", "s5_mr"], "patterns": [[], ["h"]], "replications": 12,
                  "sample_sizes": [800], "seed": 9, "folds": 2}"#;
    let a = study(cfg).without_timing();
    let b = study(cfg).without_timing();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 4);
    for r in &a.rows {
        assert_eq!(r.n, Some(800));
        assert_eq!(r.replications + r.failures, 12);
        if let Some(c) = r.coverage {
            assert!((0.0..=1.0).contains(&c));
        }
    }
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(text.lines().next().unwrap(), StudyRow::CSV_HEADER.join(","));
}

#[test]
fn tabular_bridge_error_falls_like_one_over_n() {
    let report = study(
        r#"{"kind": "convergence", "spec": "D1", "replications": 40,
            "sample_sizes": [2000, 8000, 32000, 128000], "seed": 1}"#,
    );
    for (name, slope) in &report.slopes {
        assert!((-1.3..=-0.7).contains(slope), "{name} slope {slope}");
    }
    assert_eq!(report.slopes.len(), 2);
}

#[test]
fn huge_penalty_shrinks_the_kernel_bridge_to_zero() {
    let (seed, n) = (4, 300);
    let report = study(&format!(
        r#"{{"kind": "convergence", "spec": "GAUSS1", "bridges": "kernel", "replications": 1,
            "sample_sizes": [{n}], "seed": {seed}, "lambda_h": 1e9, "lambda_q": 1e9}}"#
    ));
    let mse = report.rows[0].mse.unwrap();
    let AnySpec::Gaussian(g) = fixtures::load("GAUSS1").unwrap() else { unreachable!() };
    let data = sample(&fixtures::load("GAUSS1").unwrap(), &SamplerConfig::new(seed, n)).unwrap();
    let h0_sq = data.records.iter().map(|r| g.outcome_bridge(r.w, r.a, r.x).powi(2)).sum::<f64>() / n as f64;
    assert!((mse - h0_sq).abs() < 1e-3 * h0_sq, "{mse} vs {h0_sq}");
}

#[test]
fn bad_configs_are_rejected_with_a_path() {
    match StudyConfig::from_json_str(r#"{"kind": "robustness", "spec": "D1", "replicates": 3}"#) {
        Err(Error::Schema { path, .. }) => assert!(path.contains("replicates"), "{path}"),
        other => panic!("{other:?}"),
    }
    let descending = StudyConfig::from_json_str(
        r#"{"kind": "convergence", "spec": "D1", "sample_sizes": [500, 200]}"#,
    )
    .unwrap();
    assert!(run_study(&descending).is_err());
    let no_reps = StudyConfig::from_json_str(r#"{"kind": "robustness", "spec": "D1", "replications": 0}"#).unwrap();
    assert!(run_study(&no_reps).is_err());
}
