//! Built-in specifications, frozen as JSON under `fixtures/`.
//!
//! | name   | model                                                  |
//! |--------|--------------------------------------------------------|
//! | D1     | all-binary mediation, no hidden confounder             |
//! | F1     | binary front-door with hidden U, no direct A→Y effect  |
//! | G1     | binary generalized front-door with hidden U and A→Y    |
//! | GAUSS1 | linear-Gaussian model with a known outcome bridge      |
//!
//! The discrete tables were drawn by the random valid-spec generator;
//! `examples/generate_fixtures.rs` records how.

use crate::error::{Error, Result};
use crate::model::{AnySpec, ScmSpec};

pub const NAMES: [&str; 4] = ["D1", "F1", "G1", "GAUSS1"];

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "D1" => include_str!("../fixtures/D1.json"),
        "F1" => include_str!("../fixtures/F1.json"),
        "G1" => include_str!("../fixtures/G1.json"),
        "GAUSS1" => include_str!("../fixtures/GAUSS1.json"),
        _ => return None,
    })
}

pub fn is_fixture(name: &str) -> bool {
    source(name).is_some()
}

/// Raw JSON text of a fixture.
pub fn json(name: &str) -> Result<&'static str> {
    source(name).ok_or_else(|| {
        Error::InvalidInput(format!("unknown fixture `{name}` (known: {})", NAMES.join(", ")))
    })
}

pub fn load(name: &str) -> Result<AnySpec> {
    AnySpec::from_json_str(json(name)?)
}

/// A discrete fixture; errors for GAUSS1.
pub fn load_discrete(name: &str) -> Result<ScmSpec> {
    match load(name)? {
        AnySpec::Discrete(s) => Ok(s),
        AnySpec::Gaussian(_) => Err(Error::InvalidInput(format!("fixture `{name}` is not discrete"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelKind;

    #[test]
    fn every_fixture_parses() {
        for name in NAMES {
            assert_eq!(load(name).unwrap().name(), name);
        }
        assert_eq!(load_discrete("D1").unwrap().model_kind, ModelKind::Mediation);
        assert_eq!(load_discrete("G1").unwrap().model_kind, ModelKind::GeneralizedFrontDoor);
        assert!(load_discrete("GAUSS1").is_err());
        assert!(load("nope").is_err());
    }
}
