//! Reproducible studies: robustness grids over misspecification patterns,
//! Monte Carlo bias and coverage, and bridge convergence sweeps.

mod convergence;
mod robustness;

pub use convergence::run_convergence_sweep;
pub use robustness::run_robustness_grid;

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bridges::{Encoding, KernelConfig};
use crate::error::{Error, Result};
use crate::estimators::{BridgeMethod, Estimand, FitPlan, Misspecification, Strategy, DEFAULT_FOLDS};
use crate::fixtures;
use crate::io::{format_f64, to_json_string};
use crate::model::AnySpec;
use crate::nuisance::NuisanceMode;

/// A fixture name or an inline specification object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecRef {
    Fixture(String),
    Inline(Value),
}

impl SpecRef {
    pub fn resolve(&self) -> Result<AnySpec> {
        match self {
            SpecRef::Fixture(name) => fixtures::load(name),
            SpecRef::Inline(v) => AnySpec::from_json(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Robustness,
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMode {
    /// Exact inputs on the enumerated population (discrete specs only).
    #[default]
    Population,
    /// Monte Carlo replications at each sample size.
    Sampling,
}

/// A component that a pattern may corrupt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "h")]
    H,
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "pa", alias = "p(a|x)")]
    Propensity,
    #[serde(rename = "pw", alias = "p(w|a,x)")]
    ProxyLaw,
}

pub fn pattern_from_components(parts: &[Component]) -> Misspecification {
    let mut m = Misspecification::none();
    for c in parts {
        match c {
            Component::H => m.h = true,
            Component::Q => m.q = true,
            Component::Propensity => m.propensity = true,
            Component::ProxyLaw => m.proxy_law = true,
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeChoice {
    #[default]
    Tabular,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub spec: SpecRef,
    #[serde(default = "default_estimands")]
    pub estimands: Vec<Estimand>,
    #[serde(default = "default_a")]
    pub a: usize,
    #[serde(default)]
    pub a_prime: usize,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<Strategy>,
    /// Corruption patterns; all sixteen when absent.
    #[serde(default)]
    pub patterns: Option<Vec<Vec<Component>>>,
    #[serde(default)]
    pub mode: StudyMode,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub sample_sizes: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Cross-fitting folds for the MR strategy in sampling mode; below 2
    /// the MR estimator reuses the full-sample fits.
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub bridges: BridgeChoice,
    #[serde(default)]
    pub lambda_h: Option<f64>,
    #[serde(default)]
    pub lambda_q: Option<f64>,
}

fn default_estimands() -> Vec<Estimand> {
    vec![Estimand::Psi1, Estimand::Psi2]
}
fn default_a() -> usize {
    1
}
fn default_strategies() -> Vec<Strategy> {
    Strategy::ALL.to_vec()
}
fn default_replications() -> usize {
    1
}
fn default_folds() -> usize {
    DEFAULT_FOLDS
}

impl StudyConfig {
    /// Parses a config, naming the offending key path on failure.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let cfg: StudyConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema(if path.is_empty() { "$".into() } else { path }, e.into_inner().to_string())
        })?;
        Ok(cfg)
    }

    pub fn patterns(&self) -> Vec<Misspecification> {
        match &self.patterns {
            Some(ps) => ps.iter().map(|p| pattern_from_components(p)).collect(),
            None => Misspecification::all(),
        }
    }

    /// Checks the config against its resolved spec.
    pub fn validate(&self, spec: &AnySpec) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::schema("replications", "must be at least 1"));
        }
        if self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::schema("sample_sizes", "must be strictly ascending"));
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::schema("sample_sizes", "must be positive"));
        }
        let needs_n = self.kind == StudyKind::Convergence || self.mode == StudyMode::Sampling;
        if needs_n && self.sample_sizes.is_empty() {
            return Err(Error::schema("sample_sizes", "required for sampling and convergence studies"));
        }
        if self.kind == StudyKind::Robustness && (self.estimands.is_empty() || self.strategies.is_empty()) {
            return Err(Error::schema("estimands", "robustness studies need estimands and strategies"));
        }
        for (key, v) in [("lambda_h", self.lambda_h), ("lambda_q", self.lambda_q)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::schema(key, "must be positive and finite"));
                }
            }
        }
        let a_levels = match spec {
            AnySpec::Discrete(s) => s.space.a_levels,
            AnySpec::Gaussian(_) => 2,
        };
        if self.a >= a_levels {
            return Err(Error::schema("a", format!("must be below {a_levels}")));
        }
        if self.a_prime >= a_levels {
            return Err(Error::schema("a_prime", format!("must be below {a_levels}")));
        }
        if let AnySpec::Gaussian(_) = spec {
            if self.bridges != BridgeChoice::Kernel {
                return Err(Error::schema("bridges", "continuous specs need kernel bridges"));
            }
            if self.kind == StudyKind::Robustness && self.mode == StudyMode::Population {
                return Err(Error::schema("mode", "population mode needs a discrete spec"));
            }
            if self.kind == StudyKind::Robustness && self.estimands.iter().any(|&e| e != Estimand::Psi1) {
                return Err(Error::schema("estimands", "only psi1 has a known value for continuous specs"));
            }
        }
        Ok(())
    }

    /// Fitting recipe implied by the config and spec.
    pub(crate) fn fit_plan(&self, spec: &AnySpec, misspecify: Misspecification) -> FitPlan {
        let (nuisance, encoding) = match spec {
            AnySpec::Discrete(s) => (NuisanceMode::Tabular(s.space.clone()), Encoding::discrete(&s.space)),
            AnySpec::Gaussian(_) => (NuisanceMode::Continuous, Encoding::continuous(2)),
        };
        let bridges = match (self.bridges, spec) {
            (BridgeChoice::Tabular, AnySpec::Discrete(s)) => BridgeMethod::Tabular(s.space.clone()),
            _ => {
                let mut k = KernelConfig::new(encoding);
                k.lambda_h = self.lambda_h;
                k.lambda_q = self.lambda_q;
                BridgeMethod::Kernel(k)
            }
        };
        FitPlan {
            nuisance,
            bridges,
            misspecify,
        }
    }
}

/// One line of a study: a (target, method, pattern, n) cell.
///
/// In robustness studies `estimand` and `strategy` name the estimator; in
/// convergence studies they name the bridge (`h` or `q`) and the fitting
/// method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub estimand: String,
    pub strategy: String,
    pub pattern: String,
    /// `None` in population mode.
    pub n: Option<usize>,
    pub target: f64,
    pub mean_estimate: f64,
    pub mean_bias: f64,
    pub mc_se: Option<f64>,
    pub if_se_mean: Option<f64>,
    pub coverage: Option<f64>,
    pub mse: Option<f64>,
    pub replications: usize,
    pub failures: usize,
    pub expected_unbiased: bool,
    pub runtime_s: f64,
}

impl StudyRow {
    pub const CSV_HEADER: [&'static str; 15] = [
        "estimand",
        "strategy",
        "pattern",
        "n",
        "target",
        "mean_estimate",
        "mean_bias",
        "mc_se",
        "if_se_mean",
        "coverage",
        "mse",
        "replications",
        "failures",
        "expected_unbiased",
        "runtime_s",
    ];

    fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        vec![
            self.estimand.clone(),
            self.strategy.clone(),
            self.pattern.clone(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            format_f64(self.target),
            format_f64(self.mean_estimate),
            format_f64(self.mean_bias),
            opt(self.mc_se),
            opt(self.if_se_mean),
            opt(self.coverage),
            opt(self.mse),
            self.replications.to_string(),
            self.failures.to_string(),
            self.expected_unbiased.to_string(),
            format_f64(self.runtime_s),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub mode: StudyMode,
    pub spec: String,
    pub seed: u64,
    pub rows: Vec<StudyRow>,
    /// Convergence only: least-squares slope of log mean MSE on log n, per
    /// bridge.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slopes: Vec<(String, f64)>,
}

impl StudyReport {
    /// The report with timings zeroed: the part that is a pure function of
    /// the config.
    pub fn without_timing(&self) -> StudyReport {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.runtime_s = 0.0;
        }
        r
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(StudyRow::CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn find(&self, estimand: &str, strategy: &str, pattern: &str, n: Option<usize>) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.estimand == estimand && r.strategy == strategy && r.pattern == pattern && r.n == n)
    }
}

/// Runs whichever study the config names.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    match cfg.kind {
        StudyKind::Robustness => run_robustness_grid(cfg),
        StudyKind::Convergence => run_convergence_sweep(cfg),
    }
}

/// Mean and Monte Carlo standard error of the mean.
pub(crate) fn mean_and_se(vals: &[f64]) -> (f64, Option<f64>) {
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if vals.len() < 2 {
        return (mean, None);
    }
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}
