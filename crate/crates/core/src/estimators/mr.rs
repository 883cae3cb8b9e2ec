//! The multiple-robust (influence-function based) estimator.

use super::{weighted_mean, Estimand, EstimateResult, Strategy};
use crate::bridge_fn::BridgeEval;
use crate::error::{Error, Result};
use crate::model::{Dataset, Record};
use crate::nuisance::NuisanceSet;
use crate::oracle::IfTarget;

/// Uncentred influence-function term φ at one record; the MR estimate is
/// the mean of φ and the influence function is φ − ψ.
///
/// ψ₁: I(A=a')/p(a'|X) q(Z,A,X){Y − h(W,A,X)} + I(A=a)/p(a|X){h(W,a',X) − η₁(X,a',a)} + η₁(X,a',a)
///
/// ψ₂: q(Z,A,X){Y − h(W,A,X)} + I(A=a)/p(a|X){h̄(W,X) − η₂(X,a)} + η₁(X,A,a)
pub fn mr_term(
    r: &Record,
    h: &dyn BridgeEval,
    q: &dyn BridgeEval,
    nu: &NuisanceSet,
    target: IfTarget,
    a: usize,
    a_prime: usize,
) -> f64 {
    match target {
        IfTarget::Psi1 => {
            let eta = nu.eta1(h, r.x, a_prime, a);
            let mut v = eta;
            if r.a == a_prime {
                v += q.eval(r.z, r.a, r.x) * (r.y - h.eval(r.w, r.a, r.x)) / nu.propensity(a_prime, r.x);
            }
            if r.a == a {
                v += (h.eval(r.w, a_prime, r.x) - eta) / nu.propensity(a, r.x);
            }
            v
        }
        IfTarget::Psi2 => {
            let mut v = q.eval(r.z, r.a, r.x) * (r.y - h.eval(r.w, r.a, r.x)) + nu.eta1(h, r.x, r.a, a);
            if r.a == a {
                v += (nu.hbar(h, r.w, r.x) - nu.eta2(h, r.x, a)) / nu.propensity(a, r.x);
            }
            v
        }
    }
}

/// Standard error sd(IF)/√n from weighted influence values.
pub(crate) fn if_standard_error(data: &Dataset, influence: &[f64]) -> f64 {
    let total = data.total_weight();
    let ss: f64 = influence
        .iter()
        .enumerate()
        .map(|(i, v)| data.weight(i) * v * v)
        .sum();
    let denom = if total > 1.0 { total - 1.0 } else { total };
    (ss / denom / total).sqrt()
}

/// MR estimate with the supplied h, q and nuisances, no sample splitting.
pub fn evaluate_mr(
    data: &Dataset,
    h: &dyn BridgeEval,
    q: &dyn BridgeEval,
    nu: &NuisanceSet,
    estimand: Estimand,
    a: usize,
    a_prime: usize,
) -> Result<EstimateResult> {
    if data.is_empty() {
        return Err(Error::InvalidInput("no records".into()));
    }
    let phi: Vec<f64> = data
        .records
        .iter()
        .map(|r| mr_term(r, h, q, nu, estimand.formula(), a, a_prime))
        .collect();
    finish(data, phi, estimand, a, a_prime, nu)
}

pub(crate) fn finish(
    data: &Dataset,
    phi: Vec<f64>,
    estimand: Estimand,
    a: usize,
    a_prime: usize,
    nu: &NuisanceSet,
) -> Result<EstimateResult> {
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical {
            message: "influence function is not finite at some record (bridge evaluated off its support?)".into(),
            condition: f64::NAN,
        });
    }
    let point = weighted_mean(data, &phi);
    let influence: Vec<f64> = phi.iter().map(|v| v - point).collect();
    let se = if_standard_error(data, &influence);
    let mut out = EstimateResult::new(estimand, Strategy::S5Mr, a, a_prime, point, nu, data.len()).with_se(se);
    out.influence = influence;
    Ok(out)
}
