//! Rank diagnostics for the completeness conditions on Z and W.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::numeric_rank;
use crate::model::MediatorJoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProxySide {
    /// rank of p(m | z, a, x)
    ZSide,
    /// rank of p(m | w, a, x)
    WSide,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumRank {
    pub a: usize,
    pub x: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub side: ProxySide,
    pub m_levels: usize,
    pub ranks: Vec<StratumRank>,
    pub complete: bool,
}

pub fn check_completeness(full: &MediatorJoint, side: ProxySide) -> CompletenessReport {
    let [nx, na, nm, _, _] = full.dims();
    let mut ranks = Vec::with_capacity(nx * na);
    for x in 0..nx {
        for a in 0..na {
            let rows = match side {
                ProxySide::ZSide => full.m_given_z(a, x),
                ProxySide::WSide => full.m_given_w(a, x),
            };
            let mat = DMatrix::from_fn(rows.len(), nm, |i, j| rows[i][j]);
            ranks.push(StratumRank { a, x, rank: numeric_rank(&mat) });
        }
    }
    let complete = ranks.iter().all(|r| r.rank == nm);
    CompletenessReport {
        side,
        m_levels: nm,
        ranks,
        complete,
    }
}
