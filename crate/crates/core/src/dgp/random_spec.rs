//! Random discrete specifications that satisfy every modelling assumption.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::model::{
    mediator_joint, to_population, validate_spec, CondTable, FiniteSpace, ModelKind, OutcomeModel, ScmSpec, Var,
};
use crate::oracle::{check_completeness, solve_outcome_bridge, solve_treatment_bridge, ProxySide};
use crate::table::Table;

pub const MAX_RETRIES: usize = 100;
/// Every drawn probability is at least this before renormalization.
pub const ROW_FLOOR: f64 = 0.02;

/// Dirichlet(1, …, 1) row via normalized exponentials, floored and renormalized.
fn dirichlet_row(rng: &mut ChaCha20Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = raw.iter().sum();
    let floored: Vec<f64> = raw.iter().map(|v| (v / s).max(ROW_FLOOR)).collect();
    let t: f64 = floored.iter().sum();
    floored.into_iter().map(|v| v / t).collect()
}

fn random_table(rng: &mut ChaCha20Rng, space: &FiniteSpace, child: Var, given: Vec<Var>) -> CondTable {
    let mut shape: Vec<usize> = given.iter().map(|&v| space.levels(v)).collect();
    let k = space.levels(child);
    shape.push(k);
    let mut t = Table::zeros(&shape);
    for lead in t.leading_indices() {
        let row = dirichlet_row(rng, k);
        t.row_mut(&lead).copy_from_slice(&row);
    }
    CondTable::new(child, given, t, false)
}

fn draw(rng: &mut ChaCha20Rng, space: &FiniteSpace, kind: ModelKind, name: &str) -> ScmSpec {
    use Var::*;
    let has_u = space.has_u();
    let with_u = |v: Vec<Var>| -> Vec<Var> { v.into_iter().filter(|&g| g != U || has_u).collect() };
    let p_x = random_table(rng, space, X, vec![]);
    let p_u = has_u.then(|| random_table(rng, space, U, vec![X]));
    let p_a = random_table(rng, space, A, with_u(vec![X, U]));
    let p_m = random_table(rng, space, M, vec![X, A]);
    let p_z = random_table(rng, space, Z, vec![X, A, M]);
    let p_w = random_table(rng, space, W, vec![X, M]);
    let y_given = match kind {
        ModelKind::Mediation => vec![X, A, M, W],
        ModelKind::FrontDoor => with_u(vec![X, U, M, W]),
        ModelKind::GeneralizedFrontDoor => with_u(vec![X, U, A, M, W]),
    };
    let p_y = random_table(rng, space, Y, y_given);
    ScmSpec {
        name: name.to_string(),
        space: space.clone(),
        model_kind: kind,
        p_x,
        p_u,
        p_a,
        p_m,
        p_z,
        p_w,
        y: OutcomeModel::Discrete(p_y),
    }
}

/// Why a draw was rejected, if it was.
fn defect(spec: &ScmSpec) -> Option<String> {
    let report = validate_spec(spec);
    if let Some(c) = report.failures().next() {
        return Some(format!("fails `{}`", c.assumption));
    }
    let full = mediator_joint(spec).ok()?;
    for side in [ProxySide::ZSide, ProxySide::WSide] {
        if !check_completeness(&full, side).complete {
            return Some(format!("completeness fails on {side:?}"));
        }
    }
    let pop = to_population(spec).ok()?;
    match solve_outcome_bridge(&pop) {
        Ok(h) if h.exists() => {}
        _ => return Some("outcome bridge does not exist".into()),
    }
    for a in 0..spec.space.a_levels {
        match solve_treatment_bridge(&pop, a) {
            Ok(q) if q.exists() => {}
            _ => return Some(format!("treatment bridge for a = {a} does not exist")),
        }
    }
    None
}

/// Draws conditional tables until the spec passes validation, both
/// completeness rank checks and both bridge-existence checks.
///
/// Mediation models never carry U. Front-door models get a binary U when
/// the requested space has none.
pub fn random_valid_scm(space: &FiniteSpace, kind: ModelKind, seed: u64) -> Result<ScmSpec> {
    space.validate()?;
    let mut space = space.clone();
    space.y_continuous = false;
    match kind {
        ModelKind::Mediation => space.u_levels = 0,
        _ if space.u_levels == 0 => space.u_levels = 2,
        _ => {}
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let name = format!("random-{}-{seed}", kind.name());
    let mut reason = String::new();
    for _ in 0..MAX_RETRIES {
        let spec = draw(&mut rng, &space, kind, &name);
        match defect(&spec) {
            None => return Ok(spec),
            Some(r) => reason = r,
        }
    }
    Err(Error::GeneratorExhausted {
        retries: MAX_RETRIES,
        reason,
    })
}
