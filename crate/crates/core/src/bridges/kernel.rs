//! Gaussian RBF kernels over blocks of scalar or one-hot coordinates.

use serde::{Deserialize, Serialize};

/// How one raw coordinate enters the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    Scalar,
    /// Categorical with the given number of levels.
    OneHot(usize),
}

impl Embedding {
    pub fn dim(self) -> usize {
        match self {
            Embedding::Scalar => 1,
            Embedding::OneHot(k) => k,
        }
    }

    fn write(self, v: f64, scale: f64, out: &mut Vec<f64>) {
        match self {
            Embedding::Scalar => out.push(v * scale),
            Embedding::OneHot(k) => {
                let level = v.round();
                for l in 0..k {
                    out.push(if level == l as f64 { scale } else { 0.0 });
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    MedianHeuristic,
}

/// Gaussian RBF kernel with one bandwidth per argument block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub bandwidth: Bandwidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            bandwidth: Bandwidth::MedianHeuristic,
        }
    }
}

/// Points used by the median heuristic.
const MEDIAN_SUBSAMPLE: usize = 1000;

/// A kernel with resolved bandwidths: k(u, v) = exp(-½ Σ_b ‖u_b − v_b‖² / σ_b²).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedKernel {
    pub family: &'static str,
    pub blocks: Vec<Embedding>,
    pub bandwidths: Vec<f64>,
}

impl ResolvedKernel {
    pub fn new(spec: &KernelSpec, blocks: &[Embedding], raw: &[Vec<f64>]) -> Self {
        let bandwidths = blocks
            .iter()
            .enumerate()
            .map(|(b, &emb)| match spec.bandwidth {
                Bandwidth::Fixed(s) => s,
                Bandwidth::MedianHeuristic => median_distance(raw, b, emb),
            })
            .collect();
        ResolvedKernel {
            family: "gaussian_rbf",
            blocks: blocks.to_vec(),
            bandwidths,
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.blocks.iter().map(|e| e.dim()).sum()
    }

    /// Scaled feature vector of one raw point.
    pub fn embed(&self, raw: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.feature_dim());
        for ((emb, bw), &v) in self.blocks.iter().zip(&self.bandwidths).zip(raw) {
            emb.write(v, 1.0 / bw, &mut out);
        }
        out
    }

    /// Row-major n × d matrix of scaled features.
    pub fn embed_all(&self, raw: &[Vec<f64>]) -> Features {
        let d = self.feature_dim();
        let mut data = Vec::with_capacity(raw.len() * d);
        for r in raw {
            data.extend(self.embed(r));
        }
        Features { d, data }
    }
}

/// Embedded points, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub d: usize,
    pub data: Vec<f64>,
}

impl Features {
    pub fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.data.len() / self.d
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn select(&self, idx: &[usize]) -> Features {
        let mut data = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Features { d: self.d, data }
    }
}

#[inline]
pub fn rbf(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in u.iter().zip(v) {
        let t = a - b;
        s += t * t;
    }
    (-0.5 * s).exp()
}

/// Median of the nonzero pairwise distances within one block over the
/// first [`MEDIAN_SUBSAMPLE`] points; 1.0 when every distance is zero.
fn median_distance(raw: &[Vec<f64>], block: usize, emb: Embedding) -> f64 {
    let pts: Vec<Vec<f64>> = raw
        .iter()
        .take(MEDIAN_SUBSAMPLE)
        .map(|r| {
            let mut out = Vec::new();
            emb.write(r[block], 1.0, &mut out);
            out
        })
        .collect();
    let mut d = Vec::with_capacity(pts.len() * pts.len().saturating_sub(1) / 2);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let s: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            if s > 0.0 {
                d.push(s.sqrt());
            }
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_median_is_sqrt_two() {
        let raw: Vec<Vec<f64>> = (0..10).map(|i| vec![(i % 2) as f64]).collect();
        let k = ResolvedKernel::new(&KernelSpec::default(), &[Embedding::OneHot(2)], &raw);
        assert!((k.bandwidths[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_block_falls_back_to_unit_bandwidth() {
        let raw = vec![vec![3.0]; 5];
        let k = ResolvedKernel::new(&KernelSpec::default(), &[Embedding::Scalar], &raw);
        assert_eq!(k.bandwidths, vec![1.0]);
    }

    #[test]
    fn kernel_is_symmetric_and_unit_on_diagonal() {
        let raw = vec![vec![0.3, 1.0, -0.2], vec![1.1, 0.0, 0.4]];
        let k = ResolvedKernel::new(
            &KernelSpec::default(),
            &[Embedding::Scalar, Embedding::OneHot(2), Embedding::Scalar],
            &raw,
        );
        let f = k.embed_all(&raw);
        assert_eq!(rbf(f.row(0), f.row(1)), rbf(f.row(1), f.row(0)));
        assert_eq!(rbf(f.row(0), f.row(0)), 1.0);
    }
}
