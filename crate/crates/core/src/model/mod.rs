//! Domain types: variable spaces, structural models, exact joints, datasets.

pub mod dataset;
pub mod gaussian;
pub mod population;
pub mod scm;
pub mod space;
pub mod validate;

pub use dataset::{level_of, Dataset, DatasetMeta, Record};
pub use gaussian::{GaussianScmSpec, Propensity};
pub use population::{mediator_joint, to_population, MediatorJoint, PopulationJoint};
pub use scm::{CondTable, ModelKind, OutcomeModel, ScmSpec};
pub use space::{Assignment, FiniteSpace, Var};
pub use validate::{conditional_independence_gaps, validate_spec, ValidationReport};

use serde_json::Value;

use crate::error::{Error, Result};

/// Either kind of generative specification accepted on input.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySpec {
    Discrete(ScmSpec),
    Gaussian(GaussianScmSpec),
}

impl AnySpec {
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema("$", "expected a JSON object"))?;
        if obj.contains_key("space") {
            return ScmSpec::from_json(value).map(AnySpec::Discrete);
        }
        if obj.contains_key("alpha") {
            let spec: GaussianScmSpec =
                serde_json::from_value(value.clone()).map_err(|e| Error::schema("$", e.to_string()))?;
            spec.validate()?;
            return Ok(AnySpec::Gaussian(spec));
        }
        Err(Error::schema(
            "$",
            "expected a discrete spec (with `space`) or a linear-Gaussian spec (with `alpha`)",
        ))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::schema("$", e.to_string()))?;
        Self::from_json(&v)
    }

    pub fn name(&self) -> &str {
        match self {
            AnySpec::Discrete(s) => &s.name,
            AnySpec::Gaussian(s) => &s.name,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            AnySpec::Discrete(s) => s.to_json(),
            AnySpec::Gaussian(s) => serde_json::to_value(s).expect("gaussian spec serializes"),
        }
    }
}
