//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Minimum-norm least-squares solution of `a x = b` and its residual norm.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (RANK_TOL * smax).max(f64::MIN_POSITIVE);
    let x = svd
        .solve(b, eps)
        .expect("both singular-vector sets were computed");
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Tikhonov-regularized least squares: minimizes ‖a x − b‖² + ridge ‖x‖²,
/// returning the solution and the residual norm of the unregularized system.
/// With `ridge = 0` this is [`min_norm_lstsq`].
pub fn ridge_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, ridge: f64) -> (DVector<f64>, f64) {
    if ridge == 0.0 {
        return min_norm_lstsq(a, b);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left singular vectors computed");
    let vt = svd.v_t.as_ref().expect("right singular vectors computed");
    let utb = u.transpose() * b;
    let scaled = DVector::from_iterator(
        utb.len(),
        svd.singular_values
            .iter()
            .zip(utb.iter())
            .map(|(s, c)| s * c / (s * s + ridge)),
    );
    let x = vt.transpose() * scaled;
    let residual = (a * &x - b).norm();
    (x, residual)
}

/// Numerical rank with relative threshold [`RANK_TOL`].
pub fn numeric_rank(a: &DMatrix<f64>) -> usize {
    let sv = a.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Ratio of extreme eigenvalues of a symmetric matrix, used as a diagnostic
/// when a factorization fails.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves the symmetric positive-definite system `a x = b` (multiple
/// right-hand sides) by Cholesky.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    match a.clone().cholesky() {
        Some(ch) => Ok(ch.solve(b)),
        None => Err(Error::Numerical {
            message: format!("{what} is not positive definite after regularization"),
            condition: condition_estimate(a),
        }),
    }
}

/// Pivoted (incomplete) Cholesky factor of a PSD matrix given through its
/// diagonal and column oracle: `K ≈ L Lᵀ` with `L` of size n × r.
///
/// Pivoting stops once the largest remaining Schur-complement diagonal
/// falls to `tol` or below, so `trace(K − L Lᵀ) ≤ n · tol`. The pivot rows
/// of `L` form a lower-triangular r × r block.
pub struct PivotedCholesky {
    pub pivots: Vec<usize>,
    pub factor: DMatrix<f64>,
}

pub fn pivoted_cholesky<F>(diag: Vec<f64>, mut column: F, tol: f64, max_rank: usize) -> PivotedCholesky
where
    F: FnMut(usize) -> Vec<f64>,
{
    let n = diag.len();
    let mut d = diag;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let mut used = vec![false; n];
    while pivots.len() < max_rank.min(n) {
        let (piv, &dmax) = match d
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            Some(p) => p,
            None => break,
        };
        if dmax <= tol {
            break;
        }
        let root = dmax.sqrt();
        let mut col = column(piv);
        for prev in &cols {
            let lp = prev[piv];
            if lp != 0.0 {
                for (c, p) in col.iter_mut().zip(prev) {
                    *c -= lp * p;
                }
            }
        }
        for (i, c) in col.iter_mut().enumerate() {
            *c = if used[i] { 0.0 } else { *c / root };
        }
        col[piv] = root;
        for (i, c) in col.iter().enumerate() {
            if !used[i] {
                d[i] -= c * c;
            }
        }
        used[piv] = true;
        d[piv] = 0.0;
        pivots.push(piv);
        cols.push(col);
    }
    let r = cols.len();
    let factor = DMatrix::from_fn(n, r, |i, j| cols[j][i]);
    PivotedCholesky { pivots, factor }
}
