//! Bridge equations on finite supports as per-stratum linear systems.

use nalgebra::{DMatrix, DVector};

use crate::bridge_fn::{BridgeKind, TabularBridge};
use crate::error::{Error, Result};
use crate::linalg::ridge_lstsq;
use crate::model::PopulationJoint;
use crate::table::Table;

fn require_cell(pop: &PopulationJoint, a: usize, x: usize) -> Result<()> {
    if pop.p_xa(x, a) > 0.0 {
        Ok(())
    } else {
        Err(Error::EmptyCell(format!("no mass at (a = {a}, x = {x})")))
    }
}

/// Outcome bridge: for each (a, x), Σ_w h(w,a,x) p(w|z,a,x) = E[Y|z,a,x]
/// over all z with positive mass, by minimum-norm least squares.
pub fn solve_outcome_bridge(pop: &PopulationJoint) -> Result<TabularBridge> {
    solve_outcome_bridge_ridge(pop, 0.0)
}

/// [`solve_outcome_bridge`] with a Tikhonov term `ridge ‖h(·,a,x)‖²`.
pub fn solve_outcome_bridge_ridge(pop: &PopulationJoint, ridge: f64) -> Result<TabularBridge> {
    let [nx, na, nz, nw] = pop.dims();
    let mut values = Table::zeros(&[nx, na, nw]);
    let mut sq = 0.0;
    for x in 0..nx {
        for a in 0..na {
            require_cell(pop, a, x)?;
            let zs: Vec<usize> = (0..nz).filter(|&z| pop.p_xaz(x, a, z) > 0.0).collect();
            let m = DMatrix::from_fn(zs.len(), nw, |i, w| pop.p_w_given_zax(w, zs[i], a, x));
            let b = DVector::from_iterator(zs.len(), zs.iter().map(|&z| pop.ey_given_zax(z, a, x)));
            let (sol, res) = ridge_lstsq(&m, &b, ridge);
            sq += res * res;
            values.row_mut(&[x, a]).copy_from_slice(sol.as_slice());
        }
    }
    Ok(TabularBridge::new(BridgeKind::OutcomeH, values, None, sq.sqrt()))
}

/// Treatment bridge q_a: for each (a', x),
/// Σ_z q_a(z,a',x) p(z|w,a',x) = p(w|a,x) / p(w|a',x) over all w.
pub fn solve_treatment_bridge(pop: &PopulationJoint, a: usize) -> Result<TabularBridge> {
    solve_treatment_bridge_ridge(pop, a, 0.0)
}

pub fn solve_treatment_bridge_ridge(pop: &PopulationJoint, a: usize, ridge: f64) -> Result<TabularBridge> {
    let [nx, na, nz, nw] = pop.dims();
    if a >= na {
        return Err(Error::InvalidInput(format!("treatment level {a} outside 0..{na}")));
    }
    let mut values = Table::zeros(&[nx, na, nz]);
    let mut sq = 0.0;
    for x in 0..nx {
        require_cell(pop, a, x)?;
        for ap in 0..na {
            require_cell(pop, ap, x)?;
            let mut ws = Vec::new();
            for w in 0..nw {
                let den = pop.p_w_given_ax(w, ap, x);
                let num = pop.p_w_given_ax(w, a, x);
                if den > 0.0 {
                    ws.push(w);
                } else if num > 0.0 {
                    return Err(Error::Positivity(format!(
                        "p(w = {w} | a = {ap}, x = {x}) = 0 while p(w | a = {a}, x) > 0"
                    )));
                }
            }
            let m = DMatrix::from_fn(ws.len(), nz, |i, z| pop.p_z_given_wax(z, ws[i], ap, x));
            let b = DVector::from_iterator(
                ws.len(),
                ws.iter().map(|&w| pop.p_w_given_ax(w, a, x) / pop.p_w_given_ax(w, ap, x)),
            );
            let (sol, res) = ridge_lstsq(&m, &b, ridge);
            sq += res * res;
            values.row_mut(&[x, ap]).copy_from_slice(sol.as_slice());
        }
    }
    Ok(TabularBridge::new(BridgeKind::TreatmentQ, values, Some(a), sq.sqrt()))
}
