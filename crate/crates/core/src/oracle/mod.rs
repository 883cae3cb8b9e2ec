//! Exact population-level computation on discrete models.

mod bridge;
mod completeness;
mod identify;

pub use bridge::{solve_outcome_bridge, solve_outcome_bridge_ridge, solve_treatment_bridge, solve_treatment_bridge_ridge};
pub use completeness::{check_completeness, CompletenessReport, ProxySide};
pub use identify::{
    drq_if_mean, population_if_mean, population_mr_value, population_psi_via_h, population_psi_via_q,
    qrat_deviation, IfTarget,
};

use serde::Serialize;

use crate::model::{Assignment, MediatorJoint, ScmSpec, Var};

/// ψ₁ = E[Y^(a', M^(a))], ψ₂ = E[Y^(a)], ψ₃ = E[Y^(M^(a))].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimandValue {
    pub a: usize,
    pub a_prime: usize,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
}

impl EstimandValue {
    pub fn get(&self, k: usize) -> f64 {
        [self.psi1, self.psi2, self.psi3][k]
    }

    pub fn max_abs_diff(&self, other: &EstimandValue) -> f64 {
        (0..3)
            .map(|k| (self.get(k) - other.get(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// E[Y] when the mediator's treatment argument is set to `a_m` and every
/// other treatment argument (of Z, W and Y) is set to `rest`, or left at
/// the natural treatment when `rest` is `None`.
fn structural_mean(spec: &ScmSpec, a_m: usize, rest: Option<usize>) -> f64 {
    let s = &spec.space;
    let (nx, nu, na, nm, nz, nw) = (
        s.levels(Var::X),
        s.levels(Var::U),
        s.levels(Var::A),
        s.levels(Var::M),
        s.levels(Var::Z),
        s.levels(Var::W),
    );
    let mut total = 0.0;
    for x in 0..nx {
        for u in 0..nu {
            let base: Assignment = [x, u, 0, 0, 0, 0];
            let p_xu = spec.p_x.prob(&base, x) * spec.p_u_given_x(&base);
            if p_xu == 0.0 {
                continue;
            }
            for a_nat in 0..na {
                let p_a = spec.p_a.prob(&base, a_nat);
                if p_a == 0.0 {
                    continue;
                }
                let ar = rest.unwrap_or(a_nat);
                for m in 0..nm {
                    let p_m = spec.p_m.prob(&[x, u, a_m, 0, 0, 0], m);
                    for z in 0..nz {
                        let asg_z = [x, u, ar, m, 0, 0];
                        let p_z = spec.p_z.prob(&asg_z, z);
                        for w in 0..nw {
                            let asg = [x, u, ar, m, z, w];
                            let p_w = spec.p_w.prob(&asg, w);
                            total += p_xu * p_a * p_m * p_z * p_w * spec.y_mean(&asg);
                        }
                    }
                }
            }
        }
    }
    total
}

/// Counterfactual means by summing the structural equations under
/// intervention, with U and the W → Y pathway included when present.
pub fn true_estimands(spec: &ScmSpec, a: usize, a_prime: usize) -> EstimandValue {
    EstimandValue {
        a,
        a_prime,
        psi1: structural_mean(spec, a, Some(a_prime)),
        psi2: structural_mean(spec, a, Some(a)),
        psi3: structural_mean(spec, a, None),
    }
}

/// The classical formulas that use the mediator directly:
/// ψ₁ = Σ E[Y|a',m,x] p(m|a,x) p(x) and
/// ψ₂ = Σ E[Y|a',m,x] p(m|a,x) p(a'|x) p(x); ψ₃ shares ψ₂'s formula.
pub fn observed_mediator_psi(full: &MediatorJoint, a: usize, a_prime: usize) -> EstimandValue {
    let [nx, na, nm, _, _] = full.dims();
    let mut p_xa = vec![vec![0.0; na]; nx];
    for idx in crate::table::MultiIndex::new(full.prob.shape()) {
        p_xa[idx[0]][idx[1]] += full.prob.get(&idx);
    }
    let mut psi1 = 0.0;
    let mut psi2 = 0.0;
    for x in 0..nx {
        let px: f64 = p_xa[x].iter().sum();
        for m in 0..nm {
            let pm = full.p_m_given_ax(m, a, x);
            psi1 += px * pm * full.ey_given_amx(a_prime, m, x);
            for (at, &pxa) in p_xa[x].iter().enumerate() {
                psi2 += pxa * pm * full.ey_given_amx(at, m, x);
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

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::ModelKind;

    /// A small valid mediation spec written out by hand.
    pub(crate) fn hand_spec() -> ScmSpec {
        let json = r#"{
            "name": "hand",
            "model_kind": "mediation",
            "space": {"x_levels": 2, "a_levels": 2, "m_levels": 2, "z_levels": 2, "w_levels": 2, "y_levels": 2},
            "tables": {
                "p_x": {"given": [], "values": [0.4, 0.6]},
                "p_a": {"given": ["x"], "values": [[0.7, 0.3], [0.35, 0.65]]},
                "p_m": {"given": ["x", "a"], "values": [[[0.8, 0.2], [0.3, 0.7]], [[0.6, 0.4], [0.25, 0.75]]]},
                "p_z": {"given": ["x", "a", "m"], "values": [[[[0.85, 0.15], [0.2, 0.8]], [[0.75, 0.25], [0.1, 0.9]]], [[[0.9, 0.1], [0.3, 0.7]], [[0.8, 0.2], [0.15, 0.85]]]]},
                "p_w": {"given": ["x", "m"], "values": [[[0.8, 0.2], [0.25, 0.75]], [[0.7, 0.3], [0.1, 0.9]]]},
                "p_y": {"given": ["x", "a", "m", "w"], "values": [
                    [[[[0.9, 0.1], [0.7, 0.3]], [[0.5, 0.5], [0.3, 0.7]]], [[[0.6, 0.4], [0.5, 0.5]], [[0.2, 0.8], [0.1, 0.9]]]],
                    [[[[0.8, 0.2], [0.6, 0.4]], [[0.4, 0.6], [0.35, 0.65]]], [[[0.55, 0.45], [0.45, 0.55]], [[0.15, 0.85], [0.05, 0.95]]]]
                ]}
            }
        }"#;
        ScmSpec::from_json_str(json).unwrap()
    }

    #[test]
    fn constant_outcome_gives_constant_estimands() {
        let mut spec = hand_spec();
        spec.space.y_values = Some(vec![3.0, 3.0]);
        let v = true_estimands(&spec, 1, 0);
        for k in 0..3 {
            assert!((v.get(k) - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn mediation_classical_formula_matches_truth() {
        let spec = hand_spec();
        let full = crate::model::mediator_joint(&spec).unwrap();
        for a in 0..2 {
            for ap in 0..2 {
                let t = true_estimands(&spec, a, ap);
                let o = observed_mediator_psi(&full, a, ap);
                assert!((t.psi1 - o.psi1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_contrast_equals_interventional_mean() {
        let spec = hand_spec();
        let v = true_estimands(&spec, 1, 1);
        assert!((v.psi1 - v.psi2).abs() < 1e-15);
        assert_eq!(spec.model_kind, ModelKind::Mediation);
    }
}
