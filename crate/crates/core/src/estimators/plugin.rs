//! Strategies 1–4: single-formula plug-in estimators.

use serde::{Deserialize, Serialize};

use super::{weighted_mean, Estimand, EstimateResult, Strategy};
use crate::bridge_fn::BridgeEval;
use crate::error::{Error, Result};
use crate::model::{Dataset, Record};
use crate::nuisance::NuisanceSet;

/// Which slice of ĥ strategy 3 for ψ₁ evaluates on the a-arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum S3Form {
    /// ĥ(W, a', X), the form the identification argument supports.
    #[default]
    Derivation,
    /// ĥ(W, A, X) evaluated literally, i.e. at A = a.
    Display,
}

fn mean_of(data: &Dataset, f: impl Fn(&Record) -> f64) -> f64 {
    let vals: Vec<f64> = data.records.iter().map(f).collect();
    weighted_mean(data, &vals)
}

fn ipw(nu: &NuisanceSet, r: &Record, level: usize) -> f64 {
    if r.a == level {
        1.0 / nu.propensity(level, r.x)
    } else {
        0.0
    }
}

fn nonempty(data: &Dataset) -> Result<()> {
    if data.is_empty() {
        Err(Error::InvalidInput("no records".into()))
    } else {
        Ok(())
    }
}

/// P_n[Σ_w ĥ(w,a',X) p̂(w|a,X)]
pub fn psi1_s1(data: &Dataset, h: &dyn BridgeEval, nu: &NuisanceSet, a: usize, a_prime: usize) -> Result<EstimateResult> {
    nonempty(data)?;
    let point = mean_of(data, |r| nu.eta1(h, r.x, a_prime, a));
    Ok(EstimateResult::new(Estimand::Psi1, Strategy::S1Hw, a, a_prime, point, nu, data.len()))
}

/// P_n[I(A=a')/p̂(a'|X) · Y · q̂_a(Z,A,X)]
pub fn psi1_s2(data: &Dataset, q: &dyn BridgeEval, nu: &NuisanceSet, a: usize, a_prime: usize) -> Result<EstimateResult> {
    nonempty(data)?;
    let point = mean_of(data, |r| {
        let wt = ipw(nu, r, a_prime);
        if wt == 0.0 {
            0.0
        } else {
            wt * r.y * q.eval(r.z, r.a, r.x)
        }
    });
    Ok(EstimateResult::new(Estimand::Psi1, Strategy::S2Qa, a, a_prime, point, nu, data.len()))
}

/// P_n[I(A=a)/p̂(a|X) · ĥ(W,a',X)]
pub fn psi1_s3(data: &Dataset, h: &dyn BridgeEval, nu: &NuisanceSet, a: usize, a_prime: usize) -> Result<EstimateResult> {
    psi1_s3_form(data, h, nu, a, a_prime, S3Form::Derivation)
}

pub fn psi1_s3_form(
    data: &Dataset,
    h: &dyn BridgeEval,
    nu: &NuisanceSet,
    a: usize,
    a_prime: usize,
    form: S3Form,
) -> Result<EstimateResult> {
    nonempty(data)?;
    let slice = match form {
        S3Form::Derivation => a_prime,
        S3Form::Display => a,
    };
    let point = mean_of(data, |r| {
        let wt = ipw(nu, r, a);
        if wt == 0.0 {
            0.0
        } else {
            wt * h.eval(r.w, slice, r.x)
        }
    });
    Ok(EstimateResult::new(Estimand::Psi1, Strategy::S3Ha, a, a_prime, point, nu, data.len()))
}

/// P_n[I(A=a')/p̂(a'|X) · ĥ(W,A,X) q̂_a(Z,A,X)]
pub fn psi1_s4(
    data: &Dataset,
    h: &dyn BridgeEval,
    q: &dyn BridgeEval,
    nu: &NuisanceSet,
    a: usize,
    a_prime: usize,
) -> Result<EstimateResult> {
    nonempty(data)?;
    let point = mean_of(data, |r| {
        let wt = ipw(nu, r, a_prime);
        if wt == 0.0 {
            0.0
        } else {
            wt * h.eval(r.w, r.a, r.x) * q.eval(r.z, r.a, r.x)
        }
    });
    Ok(EstimateResult::new(Estimand::Psi1, Strategy::S4Hqa, a, a_prime, point, nu, data.len()))
}

/// P_n[Σ_w ĥ(w,A,X) p̂(w|a,X)]
pub fn psi2_s1(data: &Dataset, h: &dyn BridgeEval, nu: &NuisanceSet, a: usize) -> Result<EstimateResult> {
    nonempty(data)?;
    let point = mean_of(data, |r| nu.eta1(h, r.x, r.a, a));
    Ok(EstimateResult::new(Estimand::Psi2, Strategy::S1Hw, a, a, point, nu, data.len()))
}

/// P_n[Y q̂_a(Z,A,X)]
pub fn psi2_s2(data: &Dataset, q: &dyn BridgeEval, nu: &NuisanceSet, a: usize) -> Result<EstimateResult> {
    nonempty(data)?;
    let point = mean_of(data, |r| r.y * q.eval(r.z, r.a, r.x));
    let mut out = EstimateResult::new(Estimand::Psi2, Strategy::S2Qa, a, a, point, nu, data.len());
    // this form needs no propensity
    out.nuisance_provenance.remove("p(a|x)");
    Ok(out)
}

/// P_n[I(A=a)/p̂(a|X) Σ_a' ĥ(W,a',X) p̂(a'|X)]
pub fn psi2_s3(data: &Dataset, h: &dyn BridgeEval, nu: &NuisanceSet, a: usize) -> Result<EstimateResult> {
    nonempty(data)?;
    let point = mean_of(data, |r| {
        let wt = ipw(nu, r, a);
        if wt == 0.0 {
            0.0
        } else {
            wt * nu.hbar(h, r.w, r.x)
        }
    });
    Ok(EstimateResult::new(Estimand::Psi2, Strategy::S3Ha, a, a, point, nu, data.len()))
}

/// P_n[ĥ(W,A,X) q̂_a(Z,A,X)]
pub fn psi2_s4(data: &Dataset, h: &dyn BridgeEval, q: &dyn BridgeEval, nu: &NuisanceSet, a: usize) -> Result<EstimateResult> {
    nonempty(data)?;
    let point = mean_of(data, |r| h.eval(r.w, r.a, r.x) * q.eval(r.z, r.a, r.x));
    let mut out = EstimateResult::new(Estimand::Psi2, Strategy::S4Hqa, a, a, point, nu, data.len());
    out.nuisance_provenance.remove("p(a|x)");
    Ok(out)
}

/// Dispatches strategies 1–4 (and the uncross-fitted MR form for s5).
#[allow(clippy::too_many_arguments)]
pub fn estimate_plugin(
    data: &Dataset,
    estimand: Estimand,
    strategy: Strategy,
    h: &dyn BridgeEval,
    q: &dyn BridgeEval,
    nu: &NuisanceSet,
    a: usize,
    a_prime: usize,
    s3: S3Form,
) -> Result<EstimateResult> {
    let res = match (estimand, strategy) {
        (Estimand::Psi1, Strategy::S1Hw) => psi1_s1(data, h, nu, a, a_prime),
        (Estimand::Psi1, Strategy::S2Qa) => psi1_s2(data, q, nu, a, a_prime),
        (Estimand::Psi1, Strategy::S3Ha) => psi1_s3_form(data, h, nu, a, a_prime, s3),
        (Estimand::Psi1, Strategy::S4Hqa) => psi1_s4(data, h, q, nu, a, a_prime),
        (_, Strategy::S1Hw) => psi2_s1(data, h, nu, a),
        (_, Strategy::S2Qa) => psi2_s2(data, q, nu, a),
        (_, Strategy::S3Ha) => psi2_s3(data, h, nu, a),
        (_, Strategy::S4Hqa) => psi2_s4(data, h, q, nu, a),
        (_, Strategy::S5Mr) => super::evaluate_mr(data, h, q, nu, estimand, a, a_prime),
    }?;
    Ok(if estimand == Estimand::Psi3 { res.as_psi3() } else { res })
}
