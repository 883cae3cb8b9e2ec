//! Assumption checks on discrete structural models.

use serde::Serialize;

use super::scm::{CondTable, ModelKind, OutcomeModel, ScmSpec};
use super::space::{Assignment, Var};
use crate::table::MultiIndex;

pub const NORMALIZATION_TOL: f64 = 1e-12;
const INVARIANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub table: String,
    /// Index into the table's axes (`given` order, child level last).
    pub cell: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: String,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub spec: String,
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, assumption: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == assumption)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const CHECK_NORMALIZATION: &str = "conditional tables are normalized and non-negative";
pub const CHECK_POSITIVITY_A: &str = "positivity: p(a|x) > 0";
pub const CHECK_POSITIVITY_M: &str = "positivity: p(m|a,x) > 0";
pub const CHECK_Y_INDEP_Z: &str = "Y ⟂ Z | A,M,X";
pub const CHECK_W_INDEP_AZ: &str = "W ⟂ {A,Z} | M,X";
pub const CHECK_MEDIATOR_UNCONFOUNDED: &str = "mediator unconfounded: M has no U argument";
pub const CHECK_SEQUENTIAL_EXCHANGEABILITY: &str = "sequential exchangeability: mediation model has no U";
pub const CHECK_EXCLUSION: &str = "exclusion restriction: front-door Y has no A argument";

fn check(assumption: &str, violations: Vec<Violation>) -> AssumptionCheck {
    AssumptionCheck {
        assumption: assumption.to_string(),
        passed: violations.is_empty(),
        violations,
    }
}

fn dependence(key: &str, table: &CondTable, var: Var) -> Option<Violation> {
    table.variation_along(var, INVARIANCE_TOL).map(|cell| Violation {
        table: key.to_string(),
        cell,
        detail: format!("varies with {}", var.name()),
    })
}

fn normalization(spec: &ScmSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    for (key, table) in spec.tables() {
        if table.is_mean {
            for idx in MultiIndex::new(table.values.shape()) {
                if !table.values.get(&idx).is_finite() {
                    out.push(Violation {
                        table: key.into(),
                        cell: idx,
                        detail: "non-finite mean".into(),
                    });
                }
            }
            continue;
        }
        for lead in table.values.leading_indices() {
            let row = table.values.row(&lead);
            if let Some(l) = row.iter().position(|p| !(*p >= 0.0) || !p.is_finite()) {
                let mut cell = lead.clone();
                cell.push(l);
                out.push(Violation {
                    table: key.into(),
                    cell,
                    detail: format!("entry {} is negative or non-finite", row[l]),
                });
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                out.push(Violation {
                    table: key.into(),
                    cell: lead.clone(),
                    detail: format!("row sums to {total}"),
                });
            }
        }
    }
    out
}

/// Induced p(a|x) and p(m|a,x), summing out U.
fn induced_laws(spec: &ScmSpec) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let s = &spec.space;
    let (nx, nu, na, nm) = (
        s.levels(Var::X),
        s.levels(Var::U),
        s.levels(Var::A),
        s.levels(Var::M),
    );
    let mut p_ax = vec![vec![0.0; na]; nx];
    let mut p_max = vec![vec![vec![0.0; nm]; na]; nx];
    for x in 0..nx {
        for u in 0..nu {
            let base: Assignment = [x, u, 0, 0, 0, 0];
            let pu = spec.p_u_given_x(&base);
            for a in 0..na {
                let asg: Assignment = [x, u, a, 0, 0, 0];
                let pa = pu * spec.p_a.prob(&asg, a);
                p_ax[x][a] += pa;
                for m in 0..nm {
                    p_max[x][a][m] += pa * spec.p_m.prob(&asg, m);
                }
            }
        }
        for a in 0..na {
            if p_ax[x][a] > 0.0 {
                for m in 0..nm {
                    p_max[x][a][m] /= p_ax[x][a];
                }
            }
        }
    }
    (p_ax, p_max)
}

/// Checks every modelling assumption and reports offending cells.
pub fn validate_spec(spec: &ScmSpec) -> ValidationReport {
    let mut checks = Vec::new();
    let norm = normalization(spec);
    let normalized = norm.is_empty();
    checks.push(check(CHECK_NORMALIZATION, norm));

    let mut pos_a = Vec::new();
    let mut pos_m = Vec::new();
    if normalized {
        let (p_ax, p_max) = induced_laws(spec);
        for (x, row) in p_ax.iter().enumerate() {
            for (a, &p) in row.iter().enumerate() {
                if p <= 0.0 {
                    pos_a.push(Violation {
                        table: "p_a".into(),
                        cell: vec![x, a],
                        detail: "induced p(a|x) = 0".into(),
                    });
                }
            }
        }
        for (x, rows) in p_max.iter().enumerate() {
            for (a, row) in rows.iter().enumerate() {
                for (m, &p) in row.iter().enumerate() {
                    if p <= 0.0 {
                        pos_m.push(Violation {
                            table: "p_m".into(),
                            cell: vec![x, a, m],
                            detail: "p(m|a,x) = 0".into(),
                        });
                    }
                }
            }
        }
    }
    checks.push(check(CHECK_POSITIVITY_A, pos_a));
    checks.push(check(CHECK_POSITIVITY_M, pos_m));

    let y_table = spec.y.table();
    let y_key = match spec.y {
        OutcomeModel::Discrete(_) => "p_y",
        OutcomeModel::Continuous { .. } => "mean_y",
    };
    // Z must not carry U either: U reaches Y, so a U-dependent Z would be
    // associated with Y given (A, M, X).
    let y_z: Vec<Violation> = [dependence(y_key, y_table, Var::Z), dependence("p_z", &spec.p_z, Var::U)]
        .into_iter()
        .flatten()
        .collect();
    checks.push(check(CHECK_Y_INDEP_Z, y_z));

    let w_az: Vec<Violation> = [Var::U, Var::A, Var::Z]
        .into_iter()
        .filter_map(|v| dependence("p_w", &spec.p_w, v))
        .collect();
    checks.push(check(CHECK_W_INDEP_AZ, w_az));

    checks.push(check(
        CHECK_MEDIATOR_UNCONFOUNDED,
        dependence("p_m", &spec.p_m, Var::U).into_iter().collect(),
    ));

    let seq = if spec.model_kind == ModelKind::Mediation && spec.space.has_u() {
        vec![Violation {
            table: "space".into(),
            cell: vec![],
            detail: format!("u_levels = {} in a mediation model", spec.space.u_levels),
        }]
    } else {
        vec![]
    };
    checks.push(check(CHECK_SEQUENTIAL_EXCHANGEABILITY, seq));

    let excl = if spec.model_kind == ModelKind::FrontDoor {
        dependence(y_key, y_table, Var::A).into_iter().collect()
    } else {
        vec![]
    };
    checks.push(check(CHECK_EXCLUSION, excl));

    ValidationReport {
        spec: spec.name.clone(),
        checks,
    }
}

/// Conditional mutual informations (in nats) I(Y;Z|A,M,X) and
/// I(W;(A,Z)|M,X), computed by exhaustive enumeration of the full joint.
/// Requires a discrete outcome.
pub fn conditional_independence_gaps(spec: &ScmSpec) -> Option<(f64, f64)> {
    let OutcomeModel::Discrete(p_y) = &spec.y else {
        return None;
    };
    let s = &spec.space;
    let (nx, na, nm, nz, nw, ny) = (
        s.levels(Var::X),
        s.levels(Var::A),
        s.levels(Var::M),
        s.levels(Var::Z),
        s.levels(Var::W),
        s.levels(Var::Y),
    );
    // joint over (x, a, m, z, w, y) with U summed out
    let mut joint = crate::table::Table::zeros(&[nx, na, nm, nz, nw, ny]);
    for (asg, p) in spec.enumerate() {
        if p == 0.0 {
            continue;
        }
        for (y, py) in p_y.row(&asg).iter().enumerate() {
            joint.add(&[asg[0], asg[2], asg[3], asg[4], asg[5], y], p * py);
        }
    }
    let cmi = |keep_c: &[usize], left: &[usize], right: &[usize]| -> f64 {
        // I(L;R|C) = Σ p(l,r,c) log p(l,r,c) p(c) / (p(l,c) p(r,c))
        use std::collections::HashMap;
        let mut p_lrc: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut p_lc: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut p_rc: HashMap<Vec<usize>, f64> = HashMap::new();
        let mut p_c: HashMap<Vec<usize>, f64> = HashMap::new();
        for idx in MultiIndex::new(joint.shape()) {
            let p = joint.get(&idx);
            if p == 0.0 {
                continue;
            }
            let pick = |axes: &[usize]| axes.iter().map(|&k| idx[k]).collect::<Vec<_>>();
            let c = pick(keep_c);
            let l = pick(left);
            let r = pick(right);
            *p_lrc.entry([l.clone(), r.clone(), c.clone()].concat()).or_default() += p;
            *p_lc.entry([l, c.clone()].concat()).or_default() += p;
            *p_rc.entry([r, c.clone()].concat()).or_default() += p;
            *p_c.entry(c).or_default() += p;
        }
        let (nl, nr) = (left.len(), right.len());
        p_lrc
            .iter()
            .map(|(k, &p)| {
                let l = &k[..nl];
                let r = &k[nl..nl + nr];
                let c = &k[nl + nr..];
                let lc = p_lc[&[l, c].concat()];
                let rc = p_rc[&[r, c].concat()];
                let pc = p_c[c];
                p * (p * pc / (lc * rc)).ln()
            })
            .sum::<f64>()
            .max(0.0)
    };
    // axes: 0=x 1=a 2=m 3=z 4=w 5=y
    let y_z = cmi(&[0, 1, 2], &[5], &[3]);
    let w_az = cmi(&[0, 2], &[4], &[1, 3]);
    Some((y_z, w_az))
}
