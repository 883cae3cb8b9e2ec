//! Cross-fitted MR estimation: nuisances fitted out of fold.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mr::{finish, mr_term};
use super::{Estimand, EstimateResult};
use crate::bridge_fn::BridgeFn;
use crate::bridges::{fit_h_minimax, fit_h_tabular, fit_q_minimax, fit_q_tabular, KernelConfig};
use crate::error::{Error, Result};
use crate::model::{Dataset, FiniteSpace};
use crate::nuisance::{fit_nuisances, NuisanceMode, NuisanceSet, NuisanceTarget};

pub const DEFAULT_FOLDS: usize = 5;
/// Folds smaller than this trigger a warning.
pub const MIN_FOLD_SIZE: usize = 50;
/// Shift applied to a bridge slice when it is deliberately misspecified.
pub const BRIDGE_SHIFT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeMethod {
    Tabular(FiniteSpace),
    Kernel(KernelConfig),
}

/// Which fitted components to corrupt after fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Misspecification {
    pub h: bool,
    pub q: bool,
    pub propensity: bool,
    pub proxy_law: bool,
}

impl Misspecification {
    /// Nothing corrupted.
    pub fn none() -> Self {
        Self::default()
    }

    /// Corruption flags as (h, q, p(a|x), p(w|a,x)).
    pub fn flags(self) -> [bool; 4] {
        [self.h, self.q, self.propensity, self.proxy_law]
    }

    pub fn from_flags([h, q, propensity, proxy_law]: [bool; 4]) -> Self {
        Misspecification { h, q, propensity, proxy_law }
    }

    /// Short label such as `none` or `h+pa`.
    pub fn label(self) -> String {
        let names = ["h", "q", "pa", "pw"];
        let on: Vec<&str> = names.iter().zip(self.flags()).filter(|(_, f)| *f).map(|(n, _)| *n).collect();
        if on.is_empty() {
            "none".into()
        } else {
            on.join("+")
        }
    }

    /// All sixteen corruption patterns, `none` first.
    pub fn all() -> Vec<Self> {
        (0..16u8)
            .map(|b| Self::from_flags([b & 1 != 0, b & 2 != 0, b & 4 != 0, b & 8 != 0]))
            .collect()
    }

    /// Corrupts the selected components; bridges are shifted on their
    /// `a_prime` slice.
    pub fn apply(self, h: BridgeFn, q: BridgeFn, nu: NuisanceSet, a_prime: usize) -> Result<(BridgeFn, BridgeFn, NuisanceSet)> {
        let h = if self.h { h.shifted(a_prime, BRIDGE_SHIFT) } else { h };
        let q = if self.q { q.shifted(a_prime, BRIDGE_SHIFT) } else { q };
        let mut nu = nu;
        if self.propensity {
            nu = nu.corrupted(NuisanceTarget::Propensity)?;
        }
        if self.proxy_law {
            nu = nu.corrupted(NuisanceTarget::ProxyLaw)?;
        }
        Ok((h, q, nu))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitPlan {
    pub nuisance: NuisanceMode,
    pub bridges: BridgeMethod,
    #[serde(default)]
    pub misspecify: Misspecification,
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub h: BridgeFn,
    pub q: BridgeFn,
    pub nu: NuisanceSet,
}

impl FitPlan {
    /// Tabular nuisances and bridges on a finite space.
    pub fn tabular(space: &FiniteSpace) -> Self {
        FitPlan {
            nuisance: NuisanceMode::Tabular(space.clone()),
            bridges: BridgeMethod::Tabular(space.clone()),
            misspecify: Misspecification::default(),
        }
    }

    /// Fits h, q_a and the nuisances on `train`, then applies the
    /// configured misspecification (bridge slices at `a_prime`).
    pub fn fit(&self, train: &Dataset, a: usize, a_prime: usize) -> Result<Fitted> {
        let nu = fit_nuisances(train, &self.nuisance)?;
        let (h, q) = match &self.bridges {
            BridgeMethod::Tabular(space) => (
                BridgeFn::Tabular(fit_h_tabular(train, space)?),
                BridgeFn::Tabular(fit_q_tabular(train, space, a)?),
            ),
            BridgeMethod::Kernel(cfg) => (
                BridgeFn::Kernel(fit_h_minimax(train, cfg)?),
                BridgeFn::Kernel(fit_q_minimax(train, cfg, &nu, a)?),
            ),
        };
        let (h, q, nu) = self.misspecify.apply(h, q, nu, a_prime)?;
        Ok(Fitted { h, q, nu })
    }

    fn bridge_tag(&self) -> &'static str {
        match self.bridges {
            BridgeMethod::Tabular(_) => "tabular",
            BridgeMethod::Kernel(_) => "kernel",
        }
    }
}

/// Fold label of every record: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Cross-fitted MR estimate: each fold's influence terms use h, q and
/// nuisances fitted on the other folds.
pub fn cross_fit_mr(
    data: &Dataset,
    plan: &FitPlan,
    estimand: Estimand,
    a: usize,
    a_prime: usize,
    folds: usize,
    seed: u64,
) -> Result<EstimateResult> {
    if folds < 2 {
        return Err(Error::InvalidInput("cross-fitting needs at least 2 folds".into()));
    }
    let n = data.len();
    if n < folds {
        return Err(Error::InvalidInput(format!("{n} records cannot fill {folds} folds")));
    }
    let label = fold_assignment(n, folds, seed);
    let parts: Vec<Result<(Vec<usize>, Vec<f64>, NuisanceSet)>> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let test: Vec<usize> = (0..n).filter(|&i| label[i] == k).collect();
            let train: Vec<usize> = (0..n).filter(|&i| label[i] != k).collect();
            let fitted = plan.fit(&data.subset(&train), a, a_prime)?;
            let phi = test
                .iter()
                .map(|&i| {
                    mr_term(&data.records[i], &fitted.h, &fitted.q, &fitted.nu, estimand.formula(), a, a_prime)
                })
                .collect();
            Ok((test, phi, fitted.nu))
        })
        .collect();
    let mut phi = vec![0.0; n];
    let mut warnings = Vec::new();
    let mut first_nu = None;
    for (k, part) in parts.into_iter().enumerate() {
        let (test, vals, nu) = part?;
        if test.len() < MIN_FOLD_SIZE {
            warnings.push(format!("fold {k} has {} records (< {MIN_FOLD_SIZE})", test.len()));
        }
        for (i, v) in test.into_iter().zip(vals) {
            phi[i] = v;
        }
        first_nu.get_or_insert(nu);
    }
    let nu = first_nu.expect("at least two folds");
    let mut out = finish(data, phi, estimand, a, a_prime, &nu)?;
    let tag = format!("cross-fitted:{}", plan.bridge_tag());
    out.nuisance_provenance.insert("h".into(), tag.clone());
    out.nuisance_provenance.insert("q".into(), tag);
    out.folds = Some(folds);
    out.seed = Some(seed);
    out.warnings = warnings;
    Ok(out)
}
