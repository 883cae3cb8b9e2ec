//! Sample-based estimation of the bridge functions.

mod kernel;
mod minimax;
mod tabular;

pub use kernel::{rbf, Bandwidth, Embedding, Features, KernelSpec, ResolvedKernel};
pub use minimax::{fit_h_minimax, fit_q_minimax, Encoding, HObjective, KernelBridge, KernelConfig, PIVOT_TOL};
pub use tabular::{fit_h_tabular, fit_q_tabular, TABULAR_RIDGE};
