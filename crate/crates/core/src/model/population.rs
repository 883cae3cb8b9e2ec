//! Exact joint laws derived from a discrete structural model.

use super::dataset::Dataset;
use super::scm::ScmSpec;
use super::space::{FiniteSpace, Var};
use super::validate::validate_spec;
use crate::error::{Error, Result};
use crate::table::Table;

/// Joint of (X, A, M, Z, W) with E[Y | cell]; U summed out. This is the
/// "mediator visible" view, used only for verification.
#[derive(Debug, Clone)]
pub struct MediatorJoint {
    pub space: FiniteSpace,
    pub derived_from: String,
    /// p(x, a, m, z, w)
    pub prob: Table,
    /// E[Y | x, a, m, z, w]; zero on null cells.
    pub ey: Table,
}

/// Exact law of the observed tuple (X, A, Z, W) with E[Y | X, A, Z, W].
#[derive(Debug, Clone)]
pub struct PopulationJoint {
    pub space: FiniteSpace,
    pub derived_from: String,
    /// p(x, a, z, w)
    pub prob: Table,
    /// E[Y | x, a, z, w]; zero on null cells.
    pub ey: Table,
    p_x: Vec<f64>,
    p_xa: Table,
    p_xaz: Table,
    p_xaw: Table,
}

fn check_valid(spec: &ScmSpec) -> Result<()> {
    let report = validate_spec(spec);
    if let Some(c) = report.failures().next() {
        return Err(Error::InvalidSpec(format!(
            "`{}` fails `{}`",
            spec.name, c.assumption
        )));
    }
    Ok(())
}

/// Exact joint including the mediator. Rejects specs that fail validation.
pub fn mediator_joint(spec: &ScmSpec) -> Result<MediatorJoint> {
    check_valid(spec)?;
    Ok(mediator_joint_unchecked(spec))
}

pub(crate) fn mediator_joint_unchecked(spec: &ScmSpec) -> MediatorJoint {
    let s = &spec.space;
    let shape = [
        s.levels(Var::X),
        s.levels(Var::A),
        s.levels(Var::M),
        s.levels(Var::Z),
        s.levels(Var::W),
    ];
    let mut prob = Table::zeros(&shape);
    let mut ey = Table::zeros(&shape);
    for (asg, p) in spec.enumerate() {
        if p == 0.0 {
            continue;
        }
        let idx = [asg[0], asg[2], asg[3], asg[4], asg[5]];
        prob.add(&idx, p);
        ey.add(&idx, p * spec.y_mean(&asg));
    }
    for (e, p) in ey.data_mut().iter_mut().zip(prob.data()) {
        *e = if *p > 0.0 { *e / p } else { 0.0 };
    }
    MediatorJoint {
        space: s.clone(),
        derived_from: spec.name.clone(),
        prob,
        ey,
    }
}

/// Exact observed-variable joint, summing out M (and U when present).
pub fn to_population(spec: &ScmSpec) -> Result<PopulationJoint> {
    let full = mediator_joint(spec)?;
    Ok(PopulationJoint::from_mediator_joint(&full))
}

impl MediatorJoint {
    pub fn dims(&self) -> [usize; 5] {
        let s = self.prob.shape();
        [s[0], s[1], s[2], s[3], s[4]]
    }

    /// p(m | a, x)
    pub fn p_m_given_ax(&self, m: usize, a: usize, x: usize) -> f64 {
        let [_, _, nm, nz, nw] = self.dims();
        let mass = |mm: usize| -> f64 {
            let mut t = 0.0;
            for z in 0..nz {
                for w in 0..nw {
                    t += self.prob.get(&[x, a, mm, z, w]);
                }
            }
            t
        };
        let total: f64 = (0..nm).map(mass).sum();
        mass(m) / total
    }

    /// p(z | m, a, x)
    pub fn p_z_given_max(&self, z: usize, m: usize, a: usize, x: usize) -> f64 {
        let [_, _, _, nz, nw] = self.dims();
        let row = |zz: usize| (0..nw).map(|w| self.prob.get(&[x, a, m, zz, w])).sum::<f64>();
        let total: f64 = (0..nz).map(row).sum();
        row(z) / total
    }

    /// p(m | z, a, x) as a |Z| x |M| row-stochastic matrix.
    pub fn m_given_z(&self, a: usize, x: usize) -> Vec<Vec<f64>> {
        let [_, _, nm, nz, nw] = self.dims();
        (0..nz)
            .map(|z| {
                let row: Vec<f64> = (0..nm)
                    .map(|m| (0..nw).map(|w| self.prob.get(&[x, a, m, z, w])).sum())
                    .collect();
                let t: f64 = row.iter().sum();
                row.into_iter().map(|v| if t > 0.0 { v / t } else { 0.0 }).collect()
            })
            .collect()
    }

    /// p(m | w, a, x) as a |W| x |M| row-stochastic matrix.
    pub fn m_given_w(&self, a: usize, x: usize) -> Vec<Vec<f64>> {
        let [_, _, nm, nz, nw] = self.dims();
        (0..nw)
            .map(|w| {
                let row: Vec<f64> = (0..nm)
                    .map(|m| (0..nz).map(|z| self.prob.get(&[x, a, m, z, w])).sum())
                    .collect();
                let t: f64 = row.iter().sum();
                row.into_iter().map(|v| if t > 0.0 { v / t } else { 0.0 }).collect()
            })
            .collect()
    }

    /// E[Y | a, m, x]
    pub fn ey_given_amx(&self, a: usize, m: usize, x: usize) -> f64 {
        let [_, _, _, nz, nw] = self.dims();
        let mut num = 0.0;
        let mut den = 0.0;
        for z in 0..nz {
            for w in 0..nw {
                let p = self.prob.get(&[x, a, m, z, w]);
                num += p * self.ey.get(&[x, a, m, z, w]);
                den += p;
            }
        }
        num / den
    }
}

impl PopulationJoint {
    pub fn from_mediator_joint(full: &MediatorJoint) -> Self {
        let [nx, na, nm, nz, nw] = full.dims();
        let mut prob = Table::zeros(&[nx, na, nz, nw]);
        let mut ey = Table::zeros(&[nx, na, nz, nw]);
        for x in 0..nx {
            for a in 0..na {
                for m in 0..nm {
                    for z in 0..nz {
                        for w in 0..nw {
                            let p = full.prob.get(&[x, a, m, z, w]);
                            prob.add(&[x, a, z, w], p);
                            ey.add(&[x, a, z, w], p * full.ey.get(&[x, a, m, z, w]));
                        }
                    }
                }
            }
        }
        for (e, p) in ey.data_mut().iter_mut().zip(prob.data()) {
            *e = if *p > 0.0 { *e / p } else { 0.0 };
        }
        Self::new(full.space.clone(), full.derived_from.clone(), prob, ey)
    }

    pub fn new(space: FiniteSpace, derived_from: String, prob: Table, ey: Table) -> Self {
        let s = prob.shape();
        let (nx, na, nz, nw) = (s[0], s[1], s[2], s[3]);
        let mut p_x = vec![0.0; nx];
        let mut p_xa = Table::zeros(&[nx, na]);
        let mut p_xaz = Table::zeros(&[nx, na, nz]);
        let mut p_xaw = Table::zeros(&[nx, na, nw]);
        for x in 0..nx {
            for a in 0..na {
                for z in 0..nz {
                    for w in 0..nw {
                        let p = prob.get(&[x, a, z, w]);
                        p_x[x] += p;
                        p_xa.add(&[x, a], p);
                        p_xaz.add(&[x, a, z], p);
                        p_xaw.add(&[x, a, w], p);
                    }
                }
            }
        }
        PopulationJoint {
            space,
            derived_from,
            prob,
            ey,
            p_x,
            p_xa,
            p_xaz,
            p_xaw,
        }
    }

    /// Empirical (frequency-weighted) law of a discrete dataset.
    pub fn from_dataset(data: &Dataset, space: &FiniteSpace) -> Result<Self> {
        data.check_discrete(space)?;
        let shape = [space.x_levels, space.a_levels, space.z_levels, space.w_levels];
        let mut prob = Table::zeros(&shape);
        let mut ey = Table::zeros(&shape);
        let total = data.total_weight();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("dataset carries no mass".into()));
        }
        for (i, r) in data.records.iter().enumerate() {
            let idx = [r.x as usize, r.a, r.z as usize, r.w as usize];
            let wt = data.weight(i) / total;
            prob.add(&idx, wt);
            ey.add(&idx, wt * r.y);
        }
        for (e, p) in ey.data_mut().iter_mut().zip(prob.data()) {
            *e = if *p > 0.0 { *e / p } else { 0.0 };
        }
        Ok(Self::new(space.clone(), data.meta.source.clone(), prob, ey))
    }

    pub fn dims(&self) -> [usize; 4] {
        let s = self.prob.shape();
        [s[0], s[1], s[2], s[3]]
    }

    pub fn cell(&self, x: usize, a: usize, z: usize, w: usize) -> f64 {
        self.prob.get(&[x, a, z, w])
    }

    pub fn ey(&self, x: usize, a: usize, z: usize, w: usize) -> f64 {
        self.ey.get(&[x, a, z, w])
    }

    pub fn p_x(&self, x: usize) -> f64 {
        self.p_x[x]
    }

    pub fn p_xa(&self, x: usize, a: usize) -> f64 {
        self.p_xa.get(&[x, a])
    }

    /// p(a | x)
    pub fn p_a_given_x(&self, a: usize, x: usize) -> f64 {
        self.p_xa.get(&[x, a]) / self.p_x[x]
    }

    /// p(w | a, x)
    pub fn p_w_given_ax(&self, w: usize, a: usize, x: usize) -> f64 {
        self.p_xaw.get(&[x, a, w]) / self.p_xa.get(&[x, a])
    }

    /// p(z | a, x)
    pub fn p_z_given_ax(&self, z: usize, a: usize, x: usize) -> f64 {
        self.p_xaz.get(&[x, a, z]) / self.p_xa.get(&[x, a])
    }

    /// p(w | z, a, x)
    pub fn p_w_given_zax(&self, w: usize, z: usize, a: usize, x: usize) -> f64 {
        self.cell(x, a, z, w) / self.p_xaz.get(&[x, a, z])
    }

    /// p(z | w, a, x)
    pub fn p_z_given_wax(&self, z: usize, w: usize, a: usize, x: usize) -> f64 {
        self.cell(x, a, z, w) / self.p_xaw.get(&[x, a, w])
    }

    pub fn p_xaz(&self, x: usize, a: usize, z: usize) -> f64 {
        self.p_xaz.get(&[x, a, z])
    }

    pub fn p_xaw(&self, x: usize, a: usize, w: usize) -> f64 {
        self.p_xaw.get(&[x, a, w])
    }

    /// E[Y | z, a, x]
    pub fn ey_given_zax(&self, z: usize, a: usize, x: usize) -> f64 {
        let [_, _, _, nw] = self.dims();
        let num: f64 = (0..nw).map(|w| self.cell(x, a, z, w) * self.ey(x, a, z, w)).sum();
        num / self.p_xaz.get(&[x, a, z])
    }

    /// E[Y]
    pub fn mean_y(&self) -> f64 {
        self.prob
            .data()
            .iter()
            .zip(self.ey.data())
            .map(|(p, e)| p * e)
            .sum()
    }
}
