//! Causal effects through a hidden mediator observed via two proxies:
//! exact discrete oracles, bridge-function estimation, influence-function
//! based multiple-robust estimators and a study harness.

pub mod bridge_fn;
pub mod bridges;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod model;
pub mod nuisance;
pub mod oracle;
pub mod table;

pub use bridge_fn::{BridgeEval, BridgeFn, BridgeKind, TabularBridge, EXISTENCE_TOL};
pub use error::{Error, Result};
pub use model::{
    to_population, validate_spec, AnySpec, Dataset, FiniteSpace, GaussianScmSpec, ModelKind, PopulationJoint, ScmSpec,
};
pub use oracle::{true_estimands, EstimandValue};
