use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variable roles in structural order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    X,
    U,
    A,
    M,
    Z,
    W,
    Y,
}

impl Var {
    pub const ALL: [Var; 7] = [Var::X, Var::U, Var::A, Var::M, Var::Z, Var::W, Var::Y];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::U => "u",
            Var::A => "a",
            Var::M => "m",
            Var::Z => "z",
            Var::W => "w",
            Var::Y => "y",
        }
    }

    pub fn from_name(s: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Position in the structural order, also the slot in an [`Assignment`].
    pub fn ordinal(self) -> usize {
        self as usize
    }

    /// Variables that may appear as parents of `self`.
    pub fn predecessors(self) -> &'static [Var] {
        &Var::ALL[..self.ordinal()]
    }
}

/// Level indices for (x, u, a, m, z, w); u is 0 when the model has no U.
pub type Assignment = [usize; 6];

/// Cardinalities of every variable role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub x_levels: usize,
    #[serde(default)]
    pub u_levels: usize,
    pub a_levels: usize,
    pub m_levels: usize,
    pub z_levels: usize,
    pub w_levels: usize,
    #[serde(default)]
    pub y_levels: usize,
    #[serde(default)]
    pub y_continuous: bool,
    /// Numeric value of each Y level; defaults to the level index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_values: Option<Vec<f64>>,
}

impl FiniteSpace {
    /// All-binary space without hidden confounder.
    pub fn binary() -> Self {
        FiniteSpace {
            x_levels: 2,
            u_levels: 0,
            a_levels: 2,
            m_levels: 2,
            z_levels: 2,
            w_levels: 2,
            y_levels: 2,
            y_continuous: false,
            y_values: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: String| Err(Error::schema(format!("space.{key}"), msg));
        if self.x_levels < 1 {
            return fail("x_levels", "must be at least 1".into());
        }
        if self.a_levels < 2 {
            return fail("a_levels", "must be at least 2".into());
        }
        if self.m_levels < 2 {
            return fail("m_levels", "must be at least 2".into());
        }
        if self.z_levels < self.m_levels {
            return fail(
                "z_levels",
                format!("must be at least m_levels = {} for completeness", self.m_levels),
            );
        }
        if self.w_levels < self.m_levels {
            return fail(
                "w_levels",
                format!("must be at least m_levels = {} for completeness", self.m_levels),
            );
        }
        if !self.y_continuous {
            if self.y_levels < 2 {
                return fail("y_levels", "must be at least 2 for discrete Y".into());
            }
            if let Some(vals) = &self.y_values {
                if vals.len() != self.y_levels {
                    return fail(
                        "y_values",
                        format!("expected {} values, found {}", self.y_levels, vals.len()),
                    );
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return fail("y_values", "values must be finite".into());
                }
            }
        }
        Ok(())
    }

    pub fn has_u(&self) -> bool {
        self.u_levels > 0
    }

    /// Cardinality used for indexing; an absent U occupies one slot.
    pub fn levels(&self, var: Var) -> usize {
        match var {
            Var::X => self.x_levels,
            Var::U => self.u_levels.max(1),
            Var::A => self.a_levels,
            Var::M => self.m_levels,
            Var::Z => self.z_levels,
            Var::W => self.w_levels,
            Var::Y => {
                if self.y_continuous {
                    1
                } else {
                    self.y_levels
                }
            }
        }
    }

    pub fn y_value(&self, level: usize) -> f64 {
        match &self.y_values {
            Some(v) => v[level],
            None => level as f64,
        }
    }

    /// Range of attainable outcome values, for discrete Y.
    pub fn y_range(&self) -> Option<(f64, f64)> {
        if self.y_continuous {
            return None;
        }
        let vals: Vec<f64> = (0..self.y_levels).map(|l| self.y_value(l)).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proxy_smaller_than_mediator_rejected() {
        let mut s = FiniteSpace::binary();
        s.m_levels = 3;
        s.w_levels = 3;
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("space.z_levels"), "{err}");
    }

    #[test]
    fn absent_u_occupies_one_slot() {
        let s = FiniteSpace::binary();
        assert!(!s.has_u());
        assert_eq!(s.levels(Var::U), 1);
    }

    #[test]
    fn predecessors_follow_structural_order() {
        assert_eq!(Var::W.predecessors(), &[Var::X, Var::U, Var::A, Var::M, Var::Z]);
        assert!(Var::X.predecessors().is_empty());
    }
}
