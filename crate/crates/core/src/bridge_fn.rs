//! Bridge functions: the outcome bridge h(w, a, x) and the treatment
//! bridge q_a(z, a', x), in tabular or kernel-expansion form.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bridges::KernelBridge;
use crate::error::{Error, Result};
use crate::model::level_of;
use crate::table::Table;

/// Residual threshold below which a bridge equation counts as solved.
pub const EXISTENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BridgeKind {
    /// h(w, a, x), defined through E[Y | Z, A, X] = E[h(W, A, X) | Z, A, X].
    OutcomeH,
    /// q_a(z, a', x), defined through E[q_a(Z, A, X) | W, A = a', X] = p(W | a, X) / p(W | a', X).
    TreatmentQ,
}

/// Anything that evaluates like a bridge: `proxy` is w for an outcome
/// bridge and z for a treatment bridge.
pub trait BridgeEval {
    fn eval(&self, proxy: f64, a: usize, x: f64) -> f64;
}

impl<F: Fn(f64, usize, f64) -> f64> BridgeEval for F {
    fn eval(&self, proxy: f64, a: usize, x: f64) -> f64 {
        self(proxy, a, x)
    }
}

/// A bridge on finite supports, stored as `values[x][a][proxy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularBridge {
    pub kind: BridgeKind,
    pub values: Table,
    /// The treatment level `a` a treatment bridge q_a targets.
    pub target_a: Option<usize>,
    /// Euclidean norm of the residual of the defining linear systems.
    pub residual_norm: f64,
}

impl TabularBridge {
    pub fn new(kind: BridgeKind, values: Table, target_a: Option<usize>, residual_norm: f64) -> Self {
        TabularBridge {
            kind,
            values,
            target_a,
            residual_norm,
        }
    }

    pub fn constant(kind: BridgeKind, x_levels: usize, a_levels: usize, proxy_levels: usize, c: f64) -> Self {
        TabularBridge::new(kind, Table::filled(&[x_levels, a_levels, proxy_levels], c), None, 0.0)
    }

    /// Whether the defining equation is solved to within [`EXISTENCE_TOL`].
    pub fn exists(&self) -> bool {
        self.residual_norm < EXISTENCE_TOL
    }

    pub fn dims(&self) -> [usize; 3] {
        let s = self.values.shape();
        [s[0], s[1], s[2]]
    }

    #[inline]
    pub fn value(&self, proxy: usize, a: usize, x: usize) -> f64 {
        self.values.get(&[x, a, proxy])
    }

    /// Copy with `delta` added to every cell whose treatment argument is `a`.
    pub fn shift_slice(&self, a: usize, delta: f64) -> Self {
        let mut out = self.clone();
        let [nx, _, np] = self.dims();
        for x in 0..nx {
            for p in 0..np {
                out.values.add(&[x, a, p], delta);
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "target_a": self.target_a,
            "residual_norm": self.residual_norm,
            "exists": self.exists(),
            "dims": "x,a,proxy",
            "values": self.values.to_nested(),
        })
    }
}

impl BridgeEval for TabularBridge {
    /// NaN outside the table's support.
    fn eval(&self, proxy: f64, a: usize, x: f64) -> f64 {
        let [nx, na, np] = self.dims();
        match (level_of(proxy, np), level_of(x, nx)) {
            (Some(p), Some(xx)) if a < na => self.value(p, a, xx),
            _ => f64::NAN,
        }
    }
}

/// A fitted or exact bridge of either representation.
#[derive(Debug, Clone)]
pub enum BridgeFn {
    Tabular(TabularBridge),
    Kernel(KernelBridge),
    /// `base` with `delta` added wherever the treatment argument equals `a`.
    Shifted { base: Box<BridgeFn>, a: usize, delta: f64 },
}

impl BridgeFn {
    pub fn kind(&self) -> BridgeKind {
        match self {
            BridgeFn::Tabular(t) => t.kind,
            BridgeFn::Kernel(k) => k.kind,
            BridgeFn::Shifted { base, .. } => base.kind(),
        }
    }

    /// Copy shifted by `delta` on the slice with treatment argument `a`.
    pub fn shifted(&self, a: usize, delta: f64) -> BridgeFn {
        match self {
            BridgeFn::Tabular(t) => BridgeFn::Tabular(t.shift_slice(a, delta)),
            other => BridgeFn::Shifted {
                base: Box::new(other.clone()),
                a,
                delta,
            },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BridgeFn::Tabular(_) => "tabular",
            BridgeFn::Kernel(_) => "kernel",
            BridgeFn::Shifted { base, .. } => base.label(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            BridgeFn::Tabular(t) => t.to_json(),
            BridgeFn::Kernel(k) => k.to_json(),
            BridgeFn::Shifted { base, a, delta } => json!({
                "shifted": {"a": a, "delta": delta},
                "base": base.to_json(),
            }),
        }
    }

    pub fn expect_kind(&self, kind: BridgeKind) -> Result<()> {
        if self.kind() == kind {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "expected a {kind:?} bridge, got {:?}",
                self.kind()
            )))
        }
    }
}

impl BridgeEval for BridgeFn {
    fn eval(&self, proxy: f64, a: usize, x: f64) -> f64 {
        match self {
            BridgeFn::Tabular(t) => t.eval(proxy, a, x),
            BridgeFn::Kernel(k) => k.eval(proxy, a, x),
            BridgeFn::Shifted { base, a: s, delta } => base.eval(proxy, a, x) + if a == *s { *delta } else { 0.0 },
        }
    }
}
