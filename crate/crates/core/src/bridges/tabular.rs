//! Plug-in bridges: the oracle's linear systems with empirical laws.

use crate::bridge_fn::TabularBridge;
use crate::error::{Error, Result};
use crate::model::{Dataset, FiniteSpace, PopulationJoint};
use crate::oracle::{solve_outcome_bridge_ridge, solve_treatment_bridge_ridge};

pub const TABULAR_RIDGE: f64 = 1e-8;

fn empirical(data: &Dataset, space: &FiniteSpace) -> Result<PopulationJoint> {
    let pop = PopulationJoint::from_dataset(data, space)?;
    for a in 0..space.a_levels {
        if (0..space.x_levels).all(|x| pop.p_xa(x, a) == 0.0) {
            return Err(Error::InvalidInput(format!("treatment arm a = {a} is absent from the data")));
        }
    }
    Ok(pop)
}

pub fn fit_h_tabular(data: &Dataset, space: &FiniteSpace) -> Result<TabularBridge> {
    solve_outcome_bridge_ridge(&empirical(data, space)?, TABULAR_RIDGE)
}

pub fn fit_q_tabular(data: &Dataset, space: &FiniteSpace, a: usize) -> Result<TabularBridge> {
    solve_treatment_bridge_ridge(&empirical(data, space)?, a, TABULAR_RIDGE)
}
