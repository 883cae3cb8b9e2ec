//! Seeded sampling and random valid specifications.

mod random_spec;

pub use random_spec::{random_valid_scm, MAX_RETRIES, ROW_FLOOR};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnySpec, Assignment, Dataset, DatasetMeta, GaussianScmSpec, OutcomeModel, Record, ScmSpec, Var};

pub const RNG_NAME: &str = "ChaCha20Rng";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n: usize,
    /// Independent substream, e.g. the replication index.
    #[serde(default)]
    pub stream: u64,
}

impl SamplerConfig {
    pub fn new(seed: u64, n: usize) -> Self {
        SamplerConfig { seed, n, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        SamplerConfig { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    fn meta(&self, source: &str) -> DatasetMeta {
        DatasetMeta {
            seed: Some(self.seed),
            source: source.to_string(),
            rng: Some(format!("{RNG_NAME}(seed_from_u64, stream {})", self.stream)),
        }
    }
}

fn draw_level<R: Rng>(rng: &mut R, row: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding left a sliver above the last cumulative sum
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// One draw of (X, U, A, M, Z, W, Y) in structural order; returns the
/// observed record.
fn draw_discrete<R: Rng>(spec: &ScmSpec, rng: &mut R, noise: Option<&Normal<f64>>) -> Record {
    let mut asg: Assignment = [0; 6];
    asg[Var::X.ordinal()] = draw_level(rng, spec.p_x.row(&asg));
    if let Some(pu) = &spec.p_u {
        asg[Var::U.ordinal()] = draw_level(rng, pu.row(&asg));
    }
    asg[Var::A.ordinal()] = draw_level(rng, spec.p_a.row(&asg));
    asg[Var::M.ordinal()] = draw_level(rng, spec.p_m.row(&asg));
    asg[Var::Z.ordinal()] = draw_level(rng, spec.p_z.row(&asg));
    asg[Var::W.ordinal()] = draw_level(rng, spec.p_w.row(&asg));
    let y = match &spec.y {
        OutcomeModel::Discrete(t) => spec.space.y_value(draw_level(rng, t.row(&asg))),
        OutcomeModel::Continuous { mean, .. } => {
            mean.mean(&asg) + noise.map_or(0.0, |d| d.sample(rng))
        }
    };
    Record {
        x: asg[0] as f64,
        a: asg[2],
        z: asg[4] as f64,
        w: asg[5] as f64,
        y,
    }
}

pub fn sample_discrete(spec: &ScmSpec, cfg: &SamplerConfig) -> Result<Dataset> {
    if cfg.n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let mut rng = cfg.rng();
    let noise = match &spec.y {
        OutcomeModel::Continuous { noise_sd, .. } if *noise_sd > 0.0 => {
            Some(Normal::new(0.0, *noise_sd).map_err(|e| Error::InvalidSpec(e.to_string()))?)
        }
        _ => None,
    };
    let records = (0..cfg.n).map(|_| draw_discrete(spec, &mut rng, noise.as_ref())).collect();
    Ok(Dataset::new(records, cfg.meta(&spec.name)))
}

pub fn sample_gaussian(spec: &GaussianScmSpec, cfg: &SamplerConfig) -> Result<Dataset> {
    if cfg.n == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    spec.validate()?;
    let mut rng = cfg.rng();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let records = (0..cfg.n)
        .map(|_| {
            let x = spec.sigma_x * std.sample(&mut rng);
            let a = usize::from(rng.random::<f64>() < spec.propensity.p_treated(x));
            let m = spec.alpha * a as f64 + spec.gamma * x + spec.sigma_m * std.sample(&mut rng);
            let z = m + spec.sigma_z * std.sample(&mut rng);
            let w = m + spec.sigma_w * std.sample(&mut rng);
            let y = spec.b * m + spec.c * a as f64 + spec.d * x + spec.sigma_y * std.sample(&mut rng);
            Record { x, a, z, w, y }
        })
        .collect();
    Ok(Dataset::new(records, cfg.meta(&spec.name)))
}

/// Draws an i.i.d. sample; M and U are not returned.
pub fn sample(spec: &AnySpec, cfg: &SamplerConfig) -> Result<Dataset> {
    match spec {
        AnySpec::Discrete(s) => sample_discrete(s, cfg),
        AnySpec::Gaussian(s) => sample_gaussian(s, cfg),
    }
}
