//! Sample-level estimators of ψ₁, ψ₂ and ψ₃.

mod crossfit;
mod mr;
mod plugin;

pub use crossfit::{
    cross_fit_mr, fold_assignment, BridgeMethod, FitPlan, Fitted, Misspecification, BRIDGE_SHIFT, DEFAULT_FOLDS,
    MIN_FOLD_SIZE,
};
pub use mr::{evaluate_mr, mr_term};
pub use plugin::{
    estimate_plugin, psi1_s1, psi1_s2, psi1_s3, psi1_s3_form, psi1_s4, psi2_s1, psi2_s2, psi2_s3, psi2_s4, S3Form,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::format_f64;
use crate::nuisance::NuisanceSet;
use crate::oracle::IfTarget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    Psi1,
    Psi2,
    Psi3,
}

impl Estimand {
    pub fn name(self) -> &'static str {
        match self {
            Estimand::Psi1 => "psi1",
            Estimand::Psi2 => "psi2",
            Estimand::Psi3 => "psi3",
        }
    }

    /// ψ₃ shares every formula with ψ₂.
    pub fn formula(self) -> IfTarget {
        match self {
            Estimand::Psi1 => IfTarget::Psi1,
            Estimand::Psi2 | Estimand::Psi3 => IfTarget::Psi2,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Nuisance pairs, indexed as (h, q, p(a|x), p(w|a,x)), whose
    /// correctness alone keeps the MR estimator consistent. {q, p(w|a,x)}
    /// is only established for ψ₂.
    pub fn robust_pairs(self) -> &'static [(usize, usize)] {
        match self {
            Estimand::Psi1 => &[(0, 3), (0, 2), (1, 2)],
            Estimand::Psi2 | Estimand::Psi3 => &[(0, 3), (0, 2), (1, 2), (1, 3)],
        }
    }
}

impl fmt::Display for Estimand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi1" => Ok(Estimand::Psi1),
            "psi2" => Ok(Estimand::Psi2),
            "psi3" => Ok(Estimand::Psi3),
            _ => Err(Error::InvalidInput(format!("unknown estimand `{s}` (expected psi1, psi2 or psi3)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "s1_hw", alias = "s1")]
    S1Hw,
    #[serde(rename = "s2_qa", alias = "s2")]
    S2Qa,
    #[serde(rename = "s3_ha", alias = "s3")]
    S3Ha,
    #[serde(rename = "s4_hqa", alias = "s4")]
    S4Hqa,
    #[serde(rename = "s5_mr", alias = "s5")]
    S5Mr,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [Strategy::S1Hw, Strategy::S2Qa, Strategy::S3Ha, Strategy::S4Hqa, Strategy::S5Mr];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::S1Hw => "s1_hw",
            Strategy::S2Qa => "s2_qa",
            Strategy::S3Ha => "s3_ha",
            Strategy::S4Hqa => "s4_hqa",
            Strategy::S5Mr => "s5_mr",
        }
    }

    /// Nuisances consumed, as (h, q, p(a|x), p(w|a,x)).
    pub fn uses(self) -> [bool; 4] {
        match self {
            Strategy::S1Hw => [true, false, false, true],
            Strategy::S2Qa => [false, true, true, false],
            Strategy::S3Ha => [true, false, true, false],
            Strategy::S4Hqa => [true, true, true, false],
            Strategy::S5Mr => [true, true, true, true],
        }
    }

    /// Components actually read for `estimand`: the ψ₂ forms of s2 and s4
    /// never touch the propensity.
    pub fn uses_for(self, estimand: Estimand) -> [bool; 4] {
        let mut u = self.uses();
        if estimand != Estimand::Psi1 && matches!(self, Strategy::S2Qa | Strategy::S4Hqa) {
            u[2] = false;
        }
        u
    }

    /// Whether the strategy stays consistent when the flagged components
    /// (h, q, p(a|x), p(w|a,x)) are wrong. Plug-ins need every component
    /// they use; the MR form needs one intact robustness pair.
    pub fn expected_unbiased(self, estimand: Estimand, corrupted: [bool; 4]) -> bool {
        match self {
            Strategy::S5Mr => estimand
                .robust_pairs()
                .iter()
                .any(|&(i, j)| !corrupted[i] && !corrupted[j]),
            _ => self.uses_for(estimand).iter().zip(corrupted).all(|(&u, c)| !(u && c)),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.tag() == s || &st.tag()[..2] == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown strategy `{s}` (expected s1..s5)")))
    }
}

pub const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub estimand: Estimand,
    pub strategy: Strategy,
    pub a: usize,
    /// Only meaningful for ψ₁.
    pub a_prime: Option<usize>,
    pub point: f64,
    pub std_error: Option<f64>,
    pub ci_95: Option<[f64; 2]>,
    pub nuisance_provenance: BTreeMap<String, String>,
    pub n: usize,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Influence-function values at the records (MR only).
    #[serde(skip)]
    pub influence: Vec<f64>,
}

impl EstimateResult {
    pub(crate) fn new(
        estimand: Estimand,
        strategy: Strategy,
        a: usize,
        a_prime: usize,
        point: f64,
        nu: &NuisanceSet,
        n: usize,
    ) -> Self {
        let [uh, uq, ua, uw] = strategy.uses();
        let mut prov = BTreeMap::new();
        if uh {
            prov.insert("h".to_string(), "supplied".to_string());
        }
        if uq {
            prov.insert("q".to_string(), "supplied".to_string());
        }
        if ua {
            prov.insert("p(a|x)".to_string(), nu.propensity_provenance.to_string());
        }
        if uw {
            prov.insert("p(w|a,x)".to_string(), nu.proxy_provenance.to_string());
        }
        EstimateResult {
            estimand,
            strategy,
            a,
            a_prime: (estimand == Estimand::Psi1).then_some(a_prime),
            point,
            std_error: None,
            ci_95: None,
            nuisance_provenance: prov,
            n,
            folds: None,
            seed: None,
            warnings: Vec::new(),
            influence: Vec::new(),
        }
    }

    pub(crate) fn with_se(mut self, se: f64) -> Self {
        self.std_error = Some(se);
        self.ci_95 = Some([self.point - Z_95 * se, self.point + Z_95 * se]);
        self
    }

    /// ψ₂ result relabelled as ψ₃.
    pub fn as_psi3(mut self) -> Self {
        self.estimand = Estimand::Psi3;
        self
    }

    pub fn covers(&self, truth: f64) -> Option<bool> {
        self.ci_95.map(|[lo, hi]| lo <= truth && truth <= hi)
    }

    pub const CSV_HEADER: [&'static str; 10] =
        ["estimand", "strategy", "a", "a_prime", "point", "se", "ci_lo", "ci_hi", "n", "seed"];

    pub fn csv_row(&self) -> [String; 10] {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        [
            self.estimand.name().to_string(),
            self.strategy.tag().to_string(),
            self.a.to_string(),
            self.a_prime.map(|v| v.to_string()).unwrap_or_default(),
            format_f64(self.point),
            opt(self.std_error),
            opt(self.ci_95.map(|c| c[0])),
            opt(self.ci_95.map(|c| c[1])),
            self.n.to_string(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        ]
    }
}

/// Weighted mean of per-record values.
pub(crate) fn weighted_mean(data: &crate::model::Dataset, vals: &[f64]) -> f64 {
    let total = data.total_weight();
    vals.iter().enumerate().map(|(i, v)| data.weight(i) * v).sum::<f64>() / total
}
