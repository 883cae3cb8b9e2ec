//! Auxiliary laws every estimation strategy consumes: the propensity
//! p(a | x), the proxy law p(w | a, x), and the bridge summaries h̄, η₁, η₂.

use serde::{Deserialize, Serialize};

use crate::bridge_fn::BridgeEval;
use crate::error::{Error, Result};
use crate::model::{level_of, Dataset, FiniteSpace, PopulationJoint};
use crate::table::Table;

pub const PROPENSITY_FLOOR: f64 = 0.01;
pub const PROPENSITY_CEIL: f64 = 0.99;
pub const LAPLACE: f64 = 0.5;
/// Relative size of sign-noise corruption.
pub const CORRUPTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Empirical,
    Misspecified(String),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Exact => write!(f, "exact"),
            Provenance::Empirical => write!(f, "empirical"),
            Provenance::Misspecified(tag) => write!(f, "misspecified({tag})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropensityModel {
    /// `p[x][a]`
    Table(Table),
    /// Binary treatment with P(A = 1 | x) = σ(b0 + b1·x).
    Logistic([f64; 2]),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProxyLaw {
    /// `p[x][a][w]`
    Table(Table),
    /// Regression contract for continuous W and X: conditional expectations
    /// E[f(W, X) | A = a, X = x] by Nadaraya–Watson smoothing of the arm-a
    /// subsample `(x_i, w_i)`.
    Smoother { arms: Vec<Vec<(f64, f64)>>, bandwidth: Vec<f64> },
}

/// What gets corrupted by a misspecification injector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuisanceTarget {
    Propensity,
    ProxyLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuisanceSet {
    pub propensity: PropensityModel,
    pub proxy_law: ProxyLaw,
    pub propensity_provenance: Provenance,
    pub proxy_provenance: Provenance,
    /// Number of propensity cells moved by clipping.
    pub clipped: usize,
}

/// How nuisances are fitted from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuisanceMode {
    Tabular(FiniteSpace),
    Continuous,
}

fn clip_rows(t: &mut Table) -> usize {
    let mut clipped = 0;
    for lead in t.leading_indices() {
        let row = t.row_mut(&lead);
        let mut changed = false;
        for p in row.iter_mut() {
            let c = p.clamp(PROPENSITY_FLOOR, PROPENSITY_CEIL);
            if c != *p {
                *p = c;
                clipped += 1;
                changed = true;
            }
        }
        if changed {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
    }
    clipped
}

fn normalize_rows(t: &mut Table) {
    for lead in t.leading_indices() {
        let row = t.row_mut(&lead);
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
    }
}

/// Multiplies cells by 1 ± `CORRUPTION` with alternating signs along each
/// row (so no row is merely rescaled) and renormalizes.
fn sign_noise(t: &mut Table) {
    for lead in t.leading_indices() {
        let parity: usize = lead.iter().sum();
        let row = t.row_mut(&lead);
        for (k, p) in row.iter_mut().enumerate() {
            let sign = if (k + parity) % 2 == 0 { 1.0 } else { -1.0 };
            *p *= 1.0 + CORRUPTION * sign;
        }
    }
    normalize_rows(t);
}

impl NuisanceSet {
    /// The true laws of a population.
    pub fn exact(pop: &PopulationJoint) -> Self {
        let [nx, na, _, nw] = pop.dims();
        let mut prop = Table::zeros(&[nx, na]);
        let mut wlaw = Table::zeros(&[nx, na, nw]);
        for x in 0..nx {
            for a in 0..na {
                prop.set(&[x, a], pop.p_a_given_x(a, x));
                for w in 0..nw {
                    wlaw.set(&[x, a, w], pop.p_w_given_ax(w, a, x));
                }
            }
        }
        let clipped = clip_rows(&mut prop);
        NuisanceSet {
            propensity: PropensityModel::Table(prop),
            proxy_law: ProxyLaw::Table(wlaw),
            propensity_provenance: Provenance::Exact,
            proxy_provenance: Provenance::Exact,
            clipped,
        }
    }

    pub fn a_levels(&self) -> usize {
        match &self.propensity {
            PropensityModel::Table(t) => t.shape()[1],
            PropensityModel::Logistic(_) => 2,
        }
    }

    /// p̂(a | x), clipped.
    pub fn propensity(&self, a: usize, x: f64) -> f64 {
        match &self.propensity {
            PropensityModel::Table(t) => match level_of(x, t.shape()[0]) {
                Some(xx) if a < t.shape()[1] => t.get(&[xx, a]),
                _ => f64::NAN,
            },
            PropensityModel::Logistic([b0, b1]) => {
                let p1 = (1.0 / (1.0 + (-(b0 + b1 * x)).exp())).clamp(PROPENSITY_FLOOR, PROPENSITY_CEIL);
                match a {
                    0 => 1.0 - p1,
                    1 => p1,
                    _ => f64::NAN,
                }
            }
        }
    }

    /// p̂(w | a, x) for tabular proxy laws.
    pub fn proxy_prob(&self, w: usize, a: usize, x: usize) -> Option<f64> {
        match &self.proxy_law {
            ProxyLaw::Table(t) => Some(t.get(&[x, a, w])),
            ProxyLaw::Smoother { .. } => None,
        }
    }

    /// E_p̂[f(W, X) | A = a, X = x].
    fn expect_w<F: Fn(f64) -> f64>(&self, f: F, a: usize, x: f64) -> f64 {
        match &self.proxy_law {
            ProxyLaw::Table(t) => {
                let s = t.shape();
                let (Some(xx), true) = (level_of(x, s[0]), a < s[1]) else {
                    return f64::NAN;
                };
                t.row(&[xx, a])
                    .iter()
                    .enumerate()
                    .map(|(w, p)| p * f(w as f64))
                    .sum()
            }
            ProxyLaw::Smoother { arms, bandwidth } => {
                let Some(arm) = arms.get(a) else {
                    return f64::NAN;
                };
                let bw = bandwidth[a];
                let mut num = 0.0;
                let mut den = 0.0;
                for &(xi, wi) in arm {
                    let u = (x - xi) / bw;
                    let k = (-0.5 * u * u).exp();
                    num += k * f(wi);
                    den += k;
                }
                if den > 0.0 {
                    num / den
                } else {
                    f64::NAN
                }
            }
        }
    }

    /// η₁(x, a', a) = E[h(W, a', X) | A = a, X = x].
    pub fn eta1(&self, h: &dyn BridgeEval, x: f64, a_prime: usize, a: usize) -> f64 {
        match &self.proxy_law {
            ProxyLaw::Table(_) => self.expect_w(|w| h.eval(w, a_prime, x), a, x),
            // the regression contract smooths h(W_i, a', X_i) over arm a
            ProxyLaw::Smoother { arms, bandwidth } => {
                let Some(arm) = arms.get(a) else {
                    return f64::NAN;
                };
                let bw = bandwidth[a];
                let mut num = 0.0;
                let mut den = 0.0;
                for &(xi, wi) in arm {
                    let u = (x - xi) / bw;
                    let k = (-0.5 * u * u).exp();
                    num += k * h.eval(wi, a_prime, xi);
                    den += k;
                }
                num / den
            }
        }
    }

    /// h̄(w, x) = Σ_a' h(w, a', x) p̂(a' | x).
    pub fn hbar(&self, h: &dyn BridgeEval, w: f64, x: f64) -> f64 {
        (0..self.a_levels())
            .map(|ap| h.eval(w, ap, x) * self.propensity(ap, x))
            .sum()
    }

    /// η₂(x, a) = Σ_a' η₁(x, a', a) p̂(a' | x).
    pub fn eta2(&self, h: &dyn BridgeEval, x: f64, a: usize) -> f64 {
        (0..self.a_levels())
            .map(|ap| self.eta1(h, x, ap, a) * self.propensity(ap, x))
            .sum()
    }

    /// η₂(x, a) computed the second way, as E[h̄(W, X) | A = a, X = x].
    pub fn eta2_via_hbar(&self, h: &dyn BridgeEval, x: f64, a: usize) -> f64 {
        match &self.proxy_law {
            ProxyLaw::Table(_) => self.expect_w(|w| self.hbar(h, w, x), a, x),
            ProxyLaw::Smoother { arms, bandwidth } => {
                let arm = &arms[a];
                let bw = bandwidth[a];
                let mut num = 0.0;
                let mut den = 0.0;
                for &(xi, wi) in arm {
                    let u = (x - xi) / bw;
                    let k = (-0.5 * u * u).exp();
                    // h̄ carries the propensity at the target x
                    let hb: f64 = (0..self.a_levels())
                        .map(|ap| h.eval(wi, ap, xi) * self.propensity(ap, x))
                        .sum();
                    num += k * hb;
                    den += k;
                }
                num / den
            }
        }
    }

    /// Deliberately wrong copy for robustness studies: sign-noise corruption
    /// of one tabular law.
    pub fn corrupted(&self, target: NuisanceTarget) -> Result<Self> {
        let mut out = self.clone();
        match target {
            NuisanceTarget::Propensity => {
                let PropensityModel::Table(t) = &mut out.propensity else {
                    return Err(Error::InvalidInput("sign-noise corruption needs a tabular propensity".into()));
                };
                sign_noise(t);
                out.clipped += clip_rows(t);
                out.propensity_provenance = Provenance::Misspecified("p(a|x):sign-noise".into());
            }
            NuisanceTarget::ProxyLaw => {
                let ProxyLaw::Table(t) = &mut out.proxy_law else {
                    return Err(Error::InvalidInput("sign-noise corruption needs a tabular proxy law".into()));
                };
                sign_noise(t);
                out.proxy_provenance = Provenance::Misspecified("p(w|a,x):sign-noise".into());
            }
        }
        Ok(out)
    }

    /// Propensity replaced by a constant (the average over x of p̂(a|x)).
    pub fn with_constant_propensity(&self) -> Result<Self> {
        let PropensityModel::Table(t) = &self.propensity else {
            return Err(Error::InvalidInput("constant-propensity injector needs a tabular propensity".into()));
        };
        let (nx, na) = (t.shape()[0], t.shape()[1]);
        let mut c = Table::zeros(&[nx, na]);
        for a in 0..na {
            let avg = (0..nx).map(|x| t.get(&[x, a])).sum::<f64>() / nx as f64;
            for x in 0..nx {
                c.set(&[x, a], avg);
            }
        }
        let mut out = self.clone();
        out.propensity = PropensityModel::Table(c);
        out.propensity_provenance = Provenance::Misspecified("p(a|x):constant".into());
        Ok(out)
    }

    /// Proxy law replaced by one that ignores the treatment.
    pub fn with_w_law_ignoring_a(&self) -> Result<Self> {
        let ProxyLaw::Table(t) = &self.proxy_law else {
            return Err(Error::InvalidInput("w-law injector needs a tabular proxy law".into()));
        };
        let s = t.shape().to_vec();
        let mut c = Table::zeros(&s);
        for x in 0..s[0] {
            for w in 0..s[2] {
                let avg = (0..s[1]).map(|a| t.get(&[x, a, w])).sum::<f64>() / s[1] as f64;
                for a in 0..s[1] {
                    c.set(&[x, a, w], avg);
                }
            }
        }
        let mut out = self.clone();
        out.proxy_law = ProxyLaw::Table(c);
        out.proxy_provenance = Provenance::Misspecified("p(w|a,x):ignores-a".into());
        Ok(out)
    }
}

/// Fits the propensity and proxy law.
///
/// Tabular mode uses empirical frequencies with Laplace smoothing 0.5 per
/// cell. Continuous mode fits a logistic propensity (binary A) and keeps the
/// per-arm subsamples for Nadaraya–Watson smoothing.
pub fn fit_nuisances(data: &Dataset, mode: &NuisanceMode) -> Result<NuisanceSet> {
    if data.is_empty() {
        return Err(Error::InvalidInput("no records".into()));
    }
    match mode {
        NuisanceMode::Tabular(space) => fit_tabular(data, space),
        NuisanceMode::Continuous => fit_continuous(data),
    }
}

fn fit_tabular(data: &Dataset, space: &FiniteSpace) -> Result<NuisanceSet> {
    data.check_discrete(space)?;
    let (nx, na, nw) = (space.x_levels, space.a_levels, space.w_levels);
    let mut n_xa = Table::zeros(&[nx, na]);
    let mut n_xaw = Table::zeros(&[nx, na, nw]);
    for (i, r) in data.records.iter().enumerate() {
        let wt = data.weight(i);
        let (x, w) = (r.x as usize, r.w as usize);
        n_xa.add(&[x, r.a], wt);
        n_xaw.add(&[x, r.a, w], wt);
    }
    for a in 0..na {
        if (0..nx).all(|x| n_xa.get(&[x, a]) == 0.0) {
            return Err(Error::InvalidInput(format!("treatment arm a = {a} is absent from the data")));
        }
    }
    let mut prop = Table::zeros(&[nx, na]);
    let mut wlaw = Table::zeros(&[nx, na, nw]);
    for x in 0..nx {
        let n_x: f64 = (0..na).map(|a| n_xa.get(&[x, a])).sum();
        if n_x == 0.0 {
            return Err(Error::EmptyCell(format!("no records with x = {x}")));
        }
        for a in 0..na {
            prop.set(&[x, a], (n_xa.get(&[x, a]) + LAPLACE) / (n_x + LAPLACE * na as f64));
            let n = n_xa.get(&[x, a]);
            for w in 0..nw {
                wlaw.set(&[x, a, w], (n_xaw.get(&[x, a, w]) + LAPLACE) / (n + LAPLACE * nw as f64));
            }
        }
    }
    let clipped = clip_rows(&mut prop);
    Ok(NuisanceSet {
        propensity: PropensityModel::Table(prop),
        proxy_law: ProxyLaw::Table(wlaw),
        propensity_provenance: Provenance::Empirical,
        proxy_provenance: Provenance::Empirical,
        clipped,
    })
}

fn fit_continuous(data: &Dataset) -> Result<NuisanceSet> {
    if data.records.iter().any(|r| r.a > 1) {
        return Err(Error::InvalidInput(
            "continuous nuisance mode supports binary treatment only".into(),
        ));
    }
    let mut arms: Vec<Vec<(f64, f64)>> = vec![Vec::new(), Vec::new()];
    for r in &data.records {
        arms[r.a].push((r.x, r.w));
    }
    if arms.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("both treatment arms must be present".into()));
    }
    let coef = logistic_fit(data)?;
    let bandwidth = arms
        .iter()
        .map(|arm| {
            let n = arm.len() as f64;
            let mean = arm.iter().map(|p| p.0).sum::<f64>() / n;
            let var = arm.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            (1.06 * var.sqrt() * n.powf(-0.2)).max(1e-6)
        })
        .collect();
    let p1 = |x: f64| 1.0 / (1.0 + (-(coef[0] + coef[1] * x)).exp());
    let clipped = data
        .records
        .iter()
        .filter(|r| {
            let p = p1(r.x);
            !(PROPENSITY_FLOOR..=PROPENSITY_CEIL).contains(&p)
        })
        .count();
    Ok(NuisanceSet {
        propensity: PropensityModel::Logistic(coef),
        proxy_law: ProxyLaw::Smoother { arms, bandwidth },
        propensity_provenance: Provenance::Empirical,
        proxy_provenance: Provenance::Empirical,
        clipped,
    })
}

/// Weighted logistic regression of A on (1, X) by Newton–Raphson.
fn logistic_fit(data: &Dataset) -> Result<[f64; 2]> {
    let mut beta = [0.0f64; 2];
    for _ in 0..50 {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, r) in data.records.iter().enumerate() {
            let wt = data.weight(i);
            let p = 1.0 / (1.0 + (-(beta[0] + beta[1] * r.x)).exp());
            let resid = r.a as f64 - p;
            g0 += wt * resid;
            g1 += wt * resid * r.x;
            let v = wt * p * (1.0 - p);
            h00 += v;
            h01 += v * r.x;
            h11 += v * r.x * r.x;
        }
        // small ridge keeps separable data finite
        h00 += 1e-8;
        h11 += 1e-8;
        let det = h00 * h11 - h01 * h01;
        if !(det.abs() > 0.0) {
            return Err(Error::Numerical {
                message: "logistic propensity Hessian is singular".into(),
                condition: f64::INFINITY,
            });
        }
        let d0 = (h11 * g0 - h01 * g1) / det;
        let d1 = (h00 * g1 - h01 * g0) / det;
        beta[0] += d0;
        beta[1] += d1;
        if d0.abs().max(d1.abs()) < 1e-10 {
            break;
        }
    }
    Ok(beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge_fn::{BridgeKind, TabularBridge};
    use crate::model::{DatasetMeta, Record};

    fn toy_data() -> Dataset {
        let mut recs = Vec::new();
        for (x, a, w, n) in [(0, 0, 0, 30), (0, 0, 1, 10), (0, 1, 1, 20), (1, 0, 0, 5), (1, 1, 0, 15), (1, 1, 1, 20)] {
            for _ in 0..n {
                recs.push(Record { x: x as f64, a, z: 0.0, w: w as f64, y: 0.0 });
            }
        }
        Dataset::new(recs, DatasetMeta::default())
    }

    #[test]
    fn laplace_smoothed_frequencies() {
        let space = FiniteSpace::binary();
        let nu = fit_nuisances(&toy_data(), &NuisanceMode::Tabular(space)).unwrap();
        // x = 0: 40 untreated, 20 treated
        assert!((nu.propensity(0, 0.0) - 40.5 / 61.0).abs() < 1e-15);
        // x = 0, a = 1: w = 1 twenty times, w = 0 never
        assert!((nu.proxy_prob(0, 1, 0).unwrap() - 0.5 / 21.0).abs() < 1e-15);
        assert_eq!(nu.propensity_provenance, Provenance::Empirical);
    }

    #[test]
    fn single_arm_rejected() {
        let recs = vec![Record { x: 0.0, a: 0, z: 0.0, w: 0.0, y: 1.0 }; 5];
        let ds = Dataset::new(recs, DatasetMeta::default());
        assert!(fit_nuisances(&ds, &NuisanceMode::Tabular(FiniteSpace::binary())).is_err());
    }

    #[test]
    fn empty_x_cell_rejected() {
        let recs = vec![
            Record { x: 0.0, a: 0, z: 0.0, w: 0.0, y: 1.0 },
            Record { x: 0.0, a: 1, z: 0.0, w: 0.0, y: 1.0 },
        ];
        let ds = Dataset::new(recs, DatasetMeta::default());
        let err = fit_nuisances(&ds, &NuisanceMode::Tabular(FiniteSpace::binary())).unwrap_err();
        assert!(matches!(err, Error::EmptyCell(_)), "{err}");
    }

    #[test]
    fn eta_identities_on_toy_fit() {
        let nu = fit_nuisances(&toy_data(), &NuisanceMode::Tabular(FiniteSpace::binary())).unwrap();
        let c = TabularBridge::constant(BridgeKind::OutcomeH, 2, 2, 2, 2.5);
        for x in [0.0, 1.0] {
            for a in 0..2 {
                assert!((nu.eta1(&c, x, 1, a) - 2.5).abs() < 1e-14);
                assert!((nu.eta2(&c, x, a) - 2.5).abs() < 1e-14);
            }
        }
        // indicator of w0 = 1 gives back the proxy law
        let ind = |w: f64, _a: usize, _x: f64| if w == 1.0 { 1.0 } else { 0.0 };
        assert!((nu.eta1(&ind, 1.0, 0, 1) - nu.proxy_prob(1, 1, 1).unwrap()).abs() < 1e-15);
        // the two routes to η₂ agree
        let h = |w: f64, a: usize, x: f64| w + 2.0 * a as f64 - x * w;
        for x in [0.0, 1.0] {
            for a in 0..2 {
                assert!((nu.eta2(&h, x, a) - nu.eta2_via_hbar(&h, x, a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn corruption_changes_every_row() {
        let nu = fit_nuisances(&toy_data(), &NuisanceMode::Tabular(FiniteSpace::binary())).unwrap();
        let bad = nu.corrupted(NuisanceTarget::Propensity).unwrap();
        for x in [0.0, 1.0] {
            assert!((bad.propensity(0, x) - nu.propensity(0, x)).abs() > 1e-3);
            assert!((bad.propensity(0, x) + bad.propensity(1, x) - 1.0).abs() < 1e-12);
        }
        let bad = nu.corrupted(NuisanceTarget::ProxyLaw).unwrap();
        assert!(matches!(bad.proxy_provenance, Provenance::Misspecified(_)));
        assert!((bad.proxy_prob(0, 0, 0).unwrap() - nu.proxy_prob(0, 0, 0).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn binary_half_propensity_averages_slices() {
        let mut prop = Table::zeros(&[1, 2]);
        prop.data_mut().copy_from_slice(&[0.5, 0.5]);
        let nu = NuisanceSet {
            propensity: PropensityModel::Table(prop),
            proxy_law: ProxyLaw::Table(Table::filled(&[1, 2, 2], 0.5)),
            propensity_provenance: Provenance::Exact,
            proxy_provenance: Provenance::Exact,
            clipped: 0,
        };
        let h = |w: f64, a: usize, _x: f64| if a == 0 { w } else { 3.0 * w + 1.0 };
        assert!((nu.hbar(&h, 1.0, 0.0) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn logistic_recovers_coefficients() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(3);
        let recs: Vec<Record> = (0..20000)
            .map(|_| {
                let x: f64 = rng.random_range(-2.0..2.0);
                let p = 1.0 / (1.0 + (-(0.3 + 0.8 * x)).exp());
                let a = usize::from(rng.random::<f64>() < p);
                Record { x, a, z: 0.0, w: 0.0, y: 0.0 }
            })
            .collect();
        let ds = Dataset::new(recs, DatasetMeta::default());
        let b = logistic_fit(&ds).unwrap();
        assert!((b[0] - 0.3).abs() < 0.08 && (b[1] - 0.8).abs() < 0.08, "{b:?}");
    }
}
