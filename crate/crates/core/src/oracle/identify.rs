//! Exact population evaluation of the identification formulas and of the
//! influence-function identities.

use crate::bridge_fn::BridgeEval;
use crate::error::{Error, Result};
use crate::estimators::mr_term;
use crate::model::{Dataset, MediatorJoint, PopulationJoint};
use crate::nuisance::NuisanceSet;

use super::EstimandValue;

/// Which influence function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfTarget {
    Psi1,
    Psi2,
}

/// ψ₁ = Σ h(w,a',x) p(w|a,x) p(x) and
/// ψ₂ = Σ h(w,a',x) p(w|a,x) p(a'|x) p(x); ψ₃ equals ψ₂.
pub fn population_psi_via_h(pop: &PopulationJoint, h: &dyn BridgeEval, a: usize, a_prime: usize) -> EstimandValue {
    let [nx, na, _, nw] = pop.dims();
    let mut psi1 = 0.0;
    let mut psi2 = 0.0;
    for x in 0..nx {
        let xf = x as f64;
        for w in 0..nw {
            let pw = pop.p_w_given_ax(w, a, x) * pop.p_x(x);
            psi1 += h.eval(w as f64, a_prime, xf) * pw;
            for at in 0..na {
                psi2 += h.eval(w as f64, at, xf) * pw * pop.p_a_given_x(at, x);
            }
        }
    }
    EstimandValue {
        a,
        a_prime,
        psi1,
        psi2,
        psi3: psi2,
    }
}

/// ψ₁ = E[I(A=a')/p(a'|X) · Y · q_a(Z,A,X)] and ψ₂ = E[Y q_a(Z,A,X)];
/// ψ₃ equals ψ₂.
pub fn population_psi_via_q(
    pop: &PopulationJoint,
    q: &dyn BridgeEval,
    a: usize,
    a_prime: usize,
) -> Result<EstimandValue> {
    let [nx, na, nz, nw] = pop.dims();
    let mut psi1 = 0.0;
    let mut psi2 = 0.0;
    for x in 0..nx {
        let pa = pop.p_a_given_x(a_prime, x);
        if !(pa > 0.0) {
            return Err(Error::Positivity(format!("p(a = {a_prime} | x = {x}) = 0")));
        }
        for at in 0..na {
            for z in 0..nz {
                let qv = q.eval(z as f64, at, x as f64);
                for w in 0..nw {
                    let mass = pop.cell(x, at, z, w) * pop.ey(x, at, z, w) * qv;
                    if mass == 0.0 {
                        continue;
                    }
                    psi2 += mass;
                    if at == a_prime {
                        psi1 += mass / pa;
                    }
                }
            }
        }
    }
    Ok(EstimandValue {
        a,
        a_prime,
        psi1,
        psi2,
        psi3: psi2,
    })
}

/// Population value of the multiple-robust formula, with whatever
/// (possibly wrong) h, q and nuisances are supplied.
pub fn population_mr_value(
    pop: &PopulationJoint,
    h: &dyn BridgeEval,
    q: &dyn BridgeEval,
    nu: &NuisanceSet,
    target: IfTarget,
    a: usize,
    a_prime: usize,
) -> f64 {
    let data = Dataset::from_population(pop, 1.0);
    let total = data.total_weight();
    data.records
        .iter()
        .enumerate()
        .map(|(i, r)| data.weight(i) * mr_term(r, h, q, nu, target, a, a_prime))
        .sum::<f64>()
        / total
}

/// Population mean of the influence function recentred at `psi`.
#[allow(clippy::too_many_arguments)]
pub fn population_if_mean(
    pop: &PopulationJoint,
    h: &dyn BridgeEval,
    q: &dyn BridgeEval,
    nu: &NuisanceSet,
    target: IfTarget,
    a: usize,
    a_prime: usize,
    psi: f64,
) -> f64 {
    population_mr_value(pop, h, q, nu, target, a, a_prime) - psi
}

/// Population mean of the four-term expression in `g` whose zero mean
/// characterizes the treatment bridge q_a.
pub fn drq_if_mean(pop: &PopulationJoint, q: &dyn BridgeEval, g: &dyn BridgeEval, nu: &NuisanceSet, a: usize) -> f64 {
    let [nx, na, nz, nw] = pop.dims();
    let mut total = 0.0;
    for x in 0..nx {
        let xf = x as f64;
        let pa = nu.propensity(a, xf);
        // Σ_{w,a'} g(w,a',x) p(a'|x) p(w|a,x)
        let mut double = 0.0;
        for w in 0..nw {
            let pw = nu.proxy_prob(w, a, x).unwrap_or(f64::NAN);
            for ap in 0..na {
                double += g.eval(w as f64, ap, xf) * nu.propensity(ap, xf) * pw;
            }
        }
        for at in 0..na {
            // Σ_w g(w,A,x) p(w|a,x)
            let single: f64 = (0..nw)
                .map(|w| g.eval(w as f64, at, xf) * nu.proxy_prob(w, a, x).unwrap_or(f64::NAN))
                .sum();
            for z in 0..nz {
                for w in 0..nw {
                    let p = pop.cell(x, at, z, w);
                    if p == 0.0 {
                        continue;
                    }
                    let wf = w as f64;
                    let mut v = q.eval(z as f64, at, xf) * g.eval(wf, at, xf) - single;
                    if at == a {
                        let hb: f64 = (0..na).map(|ap| g.eval(wf, ap, xf) * nu.propensity(ap, xf)).sum();
                        v += (double - hb) / pa;
                    }
                    total += p * v;
                }
            }
        }
    }
    total
}

/// Largest deviation over (m, a', x) of
/// Σ_z q_a(z,a',x) p(z|m,a',x) from p(m|a,x) / p(m|a',x).
pub fn qrat_deviation(full: &MediatorJoint, q: &dyn BridgeEval, a: usize) -> f64 {
    let [nx, na, nm, nz, _] = full.dims();
    let mut worst: f64 = 0.0;
    for x in 0..nx {
        for ap in 0..na {
            for m in 0..nm {
                let lhs: f64 = (0..nz)
                    .map(|z| q.eval(z as f64, ap, x as f64) * full.p_z_given_max(z, m, ap, x))
                    .sum();
                let rhs = full.p_m_given_ax(m, a, x) / full.p_m_given_ax(m, ap, x);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}
