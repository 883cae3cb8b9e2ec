//! Linear-Gaussian test bed with an analytically known outcome bridge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propensity {
    /// P(A = 1) regardless of X.
    Constant(f64),
    /// P(A = 1 | x) = 1 / (1 + exp(-(b0 + b1 x))).
    Logistic([f64; 2]),
}

impl Propensity {
    pub fn p_treated(&self, x: f64) -> f64 {
        match *self {
            Propensity::Constant(p) => p,
            Propensity::Logistic([b0, b1]) => 1.0 / (1.0 + (-(b0 + b1 * x)).exp()),
        }
    }
}

/// X ~ N(0, σx²); A ~ Bernoulli(π(X));
/// M = α·A + γ·X + ε_m; Z = M + ε_z; W = M + ε_w; Y = b·M + c·A + d·X + ε_y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianScmSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub sigma_x: f64,
    pub propensity: Propensity,
    pub alpha: f64,
    pub gamma: f64,
    pub sigma_m: f64,
    pub sigma_z: f64,
    pub sigma_w: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub sigma_y: f64,
}

fn default_name() -> String {
    "gaussian".into()
}

impl GaussianScmSpec {
    pub fn validate(&self) -> Result<()> {
        let sds = [
            ("sigma_x", self.sigma_x),
            ("sigma_m", self.sigma_m),
            ("sigma_z", self.sigma_z),
            ("sigma_w", self.sigma_w),
            ("sigma_y", self.sigma_y),
        ];
        for (key, v) in sds {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::schema(key, "noise standard deviation must be positive"));
            }
        }
        if let Propensity::Constant(p) = self.propensity {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::schema("propensity.constant", "must lie in (0, 1)"));
            }
        }
        for (key, v) in [
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("b", self.b),
            ("c", self.c),
            ("d", self.d),
        ] {
            if !v.is_finite() {
                return Err(Error::schema(key, "must be finite"));
            }
        }
        Ok(())
    }

    /// The outcome bridge h(w, a, x) = b·w + c·a + d·x, which solves
    /// E[Y | Z, A, X] = E[h(W, A, X) | Z, A, X] because ε_w is independent
    /// of everything else.
    pub fn outcome_bridge(&self, w: f64, a: usize, x: f64) -> f64 {
        self.b * w + self.c * a as f64 + self.d * x
    }

    /// E[Y^(a', M^(a))] = b·α·a + c·a' (X is centred).
    pub fn psi1(&self, a: usize, a_prime: usize) -> f64 {
        self.b * self.alpha * a as f64 + self.c * a_prime as f64
    }
}
