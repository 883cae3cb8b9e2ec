//! Kernel minimax estimation of the outcome and treatment bridges.
//!
//! Both learner and adversary range over the span of kernel sections at
//! the data. Each Gram matrix is replaced by a pivoted-Cholesky factor
//! `K ≈ L Lᵀ`, so a function with values `L θ` has RKHS norm ‖θ‖. The
//! inner supremum is a concave quadratic solved in closed form; the outer
//! problem is then a convex quadratic in θ.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::kernel::{rbf, Embedding, Features, KernelSpec, ResolvedKernel};
use crate::bridge_fn::{BridgeEval, BridgeKind};
use crate::error::{Error, Result};
use crate::linalg::{pivoted_cholesky, spd_solve};
use crate::model::{Dataset, FiniteSpace};
use crate::nuisance::{NuisanceSet, PROPENSITY_CEIL, PROPENSITY_FLOOR};

/// Pivoting stops once every remaining Schur diagonal is below this
/// fraction of the mean Gram diagonal.
pub const PIVOT_TOL: f64 = 1e-10;

/// How the observed coordinates are embedded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub x: Embedding,
    pub z: Embedding,
    pub w: Embedding,
    pub a_levels: usize,
}

impl Encoding {
    pub fn continuous(a_levels: usize) -> Self {
        Encoding {
            x: Embedding::Scalar,
            z: Embedding::Scalar,
            w: Embedding::Scalar,
            a_levels,
        }
    }

    /// One-hot embedding of every discrete coordinate.
    pub fn discrete(space: &FiniteSpace) -> Self {
        Encoding {
            x: Embedding::OneHot(space.x_levels),
            z: Embedding::OneHot(space.z_levels),
            w: Embedding::OneHot(space.w_levels),
            a_levels: space.a_levels,
        }
    }

    fn a(&self) -> Embedding {
        Embedding::OneHot(self.a_levels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    /// Kernel for functions of (W, A, X) and the adversary on (W, X).
    pub kernel_h: KernelSpec,
    /// Kernel for functions of (Z, A, X).
    pub kernel_q: KernelSpec,
    /// Penalty on H-class functions; defaults to n^-0.4.
    pub lambda_h: Option<f64>,
    /// Penalty on Q-class functions; defaults to n^-0.4.
    pub lambda_q: Option<f64>,
    pub encoding: Encoding,
    pub max_rank: usize,
}

impl KernelConfig {
    pub fn new(encoding: Encoding) -> Self {
        KernelConfig {
            kernel_h: KernelSpec::default(),
            kernel_q: KernelSpec::default(),
            lambda_h: None,
            lambda_q: None,
            encoding,
            max_rank: 1500,
        }
    }

    fn lambdas(&self, n: usize) -> Result<(f64, f64)> {
        let default = (n as f64).powf(-0.4);
        let lh = self.lambda_h.unwrap_or(default);
        let lq = self.lambda_q.unwrap_or(default);
        if !(lh > 0.0 && lq > 0.0 && lh.is_finite() && lq.is_finite()) {
            return Err(Error::InvalidInput("regularizers must be positive and finite".into()));
        }
        Ok((lh, lq))
    }
}

/// ĥ or q̂_a as a kernel expansion over anchor points.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBridge {
    pub kind: BridgeKind,
    pub kernel: ResolvedKernel,
    /// Kernel of the adversary class used while fitting.
    pub adversary_kernel: ResolvedKernel,
    /// Raw (proxy, a, x) coordinates of the anchors.
    pub anchor_inputs: Vec<[f64; 3]>,
    pub anchors: Features,
    pub coefficients: Vec<f64>,
    pub lambda_h: f64,
    pub lambda_q: f64,
    pub target_a: Option<usize>,
}

impl KernelBridge {
    pub fn eval(&self, proxy: f64, a: usize, x: f64) -> f64 {
        let f = self.kernel.embed(&[proxy, a as f64, x]);
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c * rbf(&f, self.anchors.row(j)))
            .sum()
    }

    /// Same anchors, different coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), self.coefficients.len());
        KernelBridge {
            coefficients,
            ..self.clone()
        }
    }

    /// Squared RKHS norm Σ c_i c_j k(anchor_i, anchor_j).
    pub fn rkhs_norm_sq(&self, coefficients: &[f64]) -> f64 {
        let r = coefficients.len();
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..r {
                s += coefficients[i] * coefficients[j] * rbf(self.anchors.row(i), self.anchors.row(j));
            }
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "target_a": self.target_a,
            "kernel": self.kernel,
            "adversary_kernel": self.adversary_kernel,
            "lambda_h": self.lambda_h,
            "lambda_q": self.lambda_q,
            "anchors": self.anchor_inputs,
            "coefficients": self.coefficients,
        })
    }
}

fn h_inputs(data: &Dataset) -> Vec<Vec<f64>> {
    data.records.iter().map(|r| vec![r.w, r.a as f64, r.x]).collect()
}

fn q_inputs(data: &Dataset) -> Vec<Vec<f64>> {
    data.records.iter().map(|r| vec![r.z, r.a as f64, r.x]).collect()
}

fn normalized_weights(data: &Dataset) -> Vec<f64> {
    let total = data.total_weight();
    (0..data.len()).map(|i| data.weight(i) / total).collect()
}

struct LowRank {
    pivots: Vec<usize>,
    factor: DMatrix<f64>,
}

fn low_rank(features: &Features, max_rank: usize) -> LowRank {
    let n = features.len();
    let pc = pivoted_cholesky(
        vec![1.0; n],
        |j| {
            let fj = features.row(j);
            (0..n).map(|i| rbf(features.row(i), fj)).collect()
        },
        PIVOT_TOL,
        max_rank,
    );
    LowRank {
        pivots: pc.pivots,
        factor: pc.factor,
    }
}

/// Coefficients over the pivot anchors reproducing values `L θ`:
/// `L = K[:, S] L_SS^{-T}`, so `c = L_SS^{-T} θ`.
fn anchor_coefficients(lr: &LowRank, theta: &DVector<f64>) -> Result<Vec<f64>> {
    let r = lr.pivots.len();
    let lss = DMatrix::from_fn(r, r, |i, j| lr.factor[(lr.pivots[i], j)]);
    let c = lss
        .transpose()
        .solve_upper_triangular(theta)
        .ok_or_else(|| Error::Numerical {
            message: "pivot block of the kernel factor is singular".into(),
            condition: f64::INFINITY,
        })?;
    Ok(c.iter().cloned().collect())
}

/// `diag(ω) L`
fn scale_rows(l: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut out = l.clone();
    for (i, &wi) in w.iter().enumerate() {
        out.row_mut(i).scale_mut(wi);
    }
    out
}

fn check_sample(data: &Dataset) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::InvalidInput("minimax fitting needs at least two records".into()));
    }
    Ok(())
}

/// Outcome bridge from
/// min_h sup_q Ê[(h(W,A,X) − Y) q(Z,A,X) − q²(Z,A,X)] − λ_Q‖q‖² + λ_H‖h‖².
pub fn fit_h_minimax(data: &Dataset, cfg: &KernelConfig) -> Result<KernelBridge> {
    check_sample(data)?;
    let (lambda_h, lambda_q) = cfg.lambdas(data.len())?;
    let enc = cfg.encoding;
    let raw_h = h_inputs(data);
    let raw_q = q_inputs(data);
    let kh = ResolvedKernel::new(&cfg.kernel_h, &[enc.w, enc.a(), enc.x], &raw_h);
    let kq = ResolvedKernel::new(&cfg.kernel_q, &[enc.z, enc.a(), enc.x], &raw_q);
    let fh = kh.embed_all(&raw_h);
    let fq = kq.embed_all(&raw_q);
    let lh = low_rank(&fh, cfg.max_rank);
    let lq = low_rank(&fq, cfg.max_rank);
    let omega = normalized_weights(data);
    let y = DVector::from_iterator(data.len(), data.records.iter().map(|r| r.y));

    let a = scale_rows(&lq.factor, &omega); // Ω L_Q
    let rq = lq.pivots.len();
    let c_q = a.tr_mul(&lq.factor) + DMatrix::identity(rq, rq) * lambda_q;
    let p = a.tr_mul(&lh.factor);
    let v = a.tr_mul(&y);
    let mut rhs = DMatrix::zeros(rq, p.ncols() + 1);
    rhs.columns_mut(0, p.ncols()).copy_from(&p);
    rhs.column_mut(p.ncols()).copy_from(&v);
    let sol = spd_solve(&c_q, &rhs, "adversary system for h")?;
    let cinv_p = sol.columns(0, p.ncols());
    let cinv_v = sol.column(p.ncols());
    let rh = lh.pivots.len();
    let outer = p.tr_mul(&cinv_p) * 0.25 + DMatrix::identity(rh, rh) * lambda_h;
    let outer_rhs = p.tr_mul(&cinv_v) * 0.25;
    let theta = spd_solve(&outer, &DMatrix::from_column_slice(rh, 1, outer_rhs.as_slice()), "learner system for h")?;
    let coefficients = anchor_coefficients(&lh, &theta.column(0).into_owned())?;
    Ok(KernelBridge {
        kind: BridgeKind::OutcomeH,
        anchor_inputs: lh.pivots.iter().map(|&i| [raw_h[i][0], raw_h[i][1], raw_h[i][2]]).collect(),
        anchors: fh.select(&lh.pivots),
        kernel: kh,
        adversary_kernel: kq,
        coefficients,
        lambda_h,
        lambda_q,
        target_a: None,
    })
}

/// Treatment bridge q_a from
/// min_q Σ_a' sup_h Ê[{I(A=a')/p(a'|X) q(Z,A,X) − I(A=a)/p(a|X)} h(W,X) − h²(W,X)]
/// − λ_H‖h‖² + λ_Q‖q‖², with the propensity taken from `nu`.
pub fn fit_q_minimax(data: &Dataset, cfg: &KernelConfig, nu: &NuisanceSet, a: usize) -> Result<KernelBridge> {
    check_sample(data)?;
    let (lambda_h, lambda_q) = cfg.lambdas(data.len())?;
    let enc = cfg.encoding;
    let na = enc.a_levels;
    if a >= na {
        return Err(Error::InvalidInput(format!("treatment level {a} outside 0..{na}")));
    }
    let n = data.len();
    let mut prop = vec![vec![0.0; na]; n];
    for (i, r) in data.records.iter().enumerate() {
        for (ap, slot) in prop[i].iter_mut().enumerate() {
            let p = nu.propensity(ap, r.x);
            if !(PROPENSITY_FLOOR..=PROPENSITY_CEIL).contains(&p) {
                return Err(Error::Positivity(format!(
                    "propensity p(a = {ap} | x = {}) = {p} outside [{PROPENSITY_FLOOR}, {PROPENSITY_CEIL}]",
                    r.x
                )));
            }
            *slot = p;
        }
    }
    let raw_q = q_inputs(data);
    let raw_adv: Vec<Vec<f64>> = data.records.iter().map(|r| vec![r.w, r.x]).collect();
    let kq = ResolvedKernel::new(&cfg.kernel_q, &[enc.z, enc.a(), enc.x], &raw_q);
    let kadv = ResolvedKernel::new(&cfg.kernel_h, &[enc.w, enc.x], &raw_adv);
    let fq = kq.embed_all(&raw_q);
    let fadv = kadv.embed_all(&raw_adv);
    let lq = low_rank(&fq, cfg.max_rank);
    let ladv = low_rank(&fadv, cfg.max_rank);
    let omega = normalized_weights(data);

    let b = scale_rows(&ladv.factor, &omega); // Ω L_H
    let rh = ladv.pivots.len();
    let rq = lq.pivots.len();
    let c_h = b.tr_mul(&ladv.factor) + DMatrix::identity(rh, rh) * lambda_h;
    let target = DVector::from_iterator(
        n,
        data.records
            .iter()
            .enumerate()
            .map(|(i, r)| if r.a == a { 1.0 / prop[i][a] } else { 0.0 }),
    );
    let v = b.tr_mul(&target);
    let mut ps = Vec::with_capacity(na);
    for ap in 0..na {
        let d: Vec<f64> = data
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| if r.a == ap { 1.0 / prop[i][ap] } else { 0.0 })
            .collect();
        ps.push(b.tr_mul(&scale_rows(&lq.factor, &d)));
    }
    let mut rhs = DMatrix::zeros(rh, na * rq + 1);
    for (k, p) in ps.iter().enumerate() {
        rhs.columns_mut(k * rq, rq).copy_from(p);
    }
    rhs.column_mut(na * rq).copy_from(&v);
    let sol = spd_solve(&c_h, &rhs, "adversary system for q")?;
    let cinv_v = sol.column(na * rq);
    let mut outer = DMatrix::identity(rq, rq) * lambda_q;
    let mut outer_rhs = DVector::zeros(rq);
    for (k, p) in ps.iter().enumerate() {
        let cinv_p = sol.columns(k * rq, rq);
        outer += p.tr_mul(&cinv_p) * 0.25;
        outer_rhs += p.tr_mul(&cinv_v) * 0.25;
    }
    let theta = spd_solve(&outer, &DMatrix::from_column_slice(rq, 1, outer_rhs.as_slice()), "learner system for q")?;
    let coefficients = anchor_coefficients(&lq, &theta.column(0).into_owned())?;
    Ok(KernelBridge {
        kind: BridgeKind::TreatmentQ,
        anchor_inputs: lq.pivots.iter().map(|&i| [raw_q[i][0], raw_q[i][1], raw_q[i][2]]).collect(),
        anchors: fq.select(&lq.pivots),
        kernel: kq,
        adversary_kernel: kadv,
        coefficients,
        lambda_h,
        lambda_q,
        target_a: Some(a),
    })
}

/// The regularized outer objective of the h problem, with the adversary's
/// supremum taken over the full span of kernel sections at the data
/// (dense eigendecomposition; intended for moderate n).
pub struct HObjective {
    y: DVector<f64>,
    omega: Vec<f64>,
    /// `B` with `K_Q = B Bᵀ`.
    adversary: DMatrix<f64>,
    /// Cholesky factor of `Bᵀ Ω B + λ_Q I`.
    inner: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    /// h-kernel sections: data × anchors.
    sections: DMatrix<f64>,
    bridge: KernelBridge,
}

impl HObjective {
    pub fn new(data: &Dataset, bridge: &KernelBridge) -> Result<Self> {
        if bridge.kind != BridgeKind::OutcomeH {
            return Err(Error::InvalidInput("objective is defined for outcome bridges".into()));
        }
        let n = data.len();
        let fq = bridge.adversary_kernel.embed_all(&q_inputs(data));
        let kq = DMatrix::from_fn(n, n, |i, j| rbf(fq.row(i), fq.row(j)));
        let eig = kq.symmetric_eigen();
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > 1e-14 * top).collect();
        let adversary = DMatrix::from_fn(n, keep.len(), |i, k| {
            eig.eigenvectors[(i, keep[k])] * eig.eigenvalues[keep[k]].sqrt()
        });
        let omega = normalized_weights(data);
        let inner_m = scale_rows(&adversary, &omega).tr_mul(&adversary)
            + DMatrix::identity(keep.len(), keep.len()) * bridge.lambda_q;
        let inner = inner_m.clone().cholesky().ok_or_else(|| Error::Numerical {
            message: "adversary system is not positive definite".into(),
            condition: crate::linalg::condition_estimate(&inner_m),
        })?;
        let fh = bridge.kernel.embed_all(&h_inputs(data));
        let sections = DMatrix::from_fn(n, bridge.anchors.len(), |i, j| rbf(fh.row(i), bridge.anchors.row(j)));
        Ok(HObjective {
            y: DVector::from_iterator(n, data.records.iter().map(|r| r.y)),
            omega,
            adversary,
            inner,
            sections,
            bridge: bridge.clone(),
        })
    }

    /// Objective at the expansion with the given coefficients over the
    /// fitted bridge's anchors.
    pub fn value(&self, coefficients: &[f64]) -> f64 {
        let c = DVector::from_column_slice(coefficients);
        let r = &self.sections * &c - &self.y;
        let wr = DVector::from_iterator(r.len(), r.iter().zip(&self.omega).map(|(a, b)| a * b));
        let s = self.adversary.tr_mul(&wr);
        let sup = 0.25 * s.dot(&self.inner.solve(&s));
        sup + self.bridge.lambda_h * self.bridge.rkhs_norm_sq(coefficients)
    }
}
impl BridgeEval for KernelBridge {
    fn eval(&self, proxy: f64, a: usize, x: f64) -> f64 {
        KernelBridge::eval(self, proxy, a, x)
    }
}

