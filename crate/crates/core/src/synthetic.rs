//! Seeded synthetic instances: a sparse core with values `1 + N(0, s²)`, random
//! orthonormal factors, and Gaussian noise on the compressed observation.
//!
//! Every replicate draws from its own ChaCha20 stream: key from the experiment
//! seed, stream id from the replicate index. Within a stream the draw order is
//! factors (mode 0 first), then the support, then core values, then the noise.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RecoveryConfig;
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::fista::StageStats;
use crate::metrics::{frobenius_error, support_scores};
use crate::pipeline::{recover, Method};
use crate::support::SupportSet;
use crate::tensor::DenseTensor;

/// How the second parameter of `N(μ, ·)` in the data model is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpreadConvention {
    Variance,
    Stddev,
}

impl SpreadConvention {
    pub fn to_std(self, spread: f64) -> f64 {
        match self {
            SpreadConvention::Variance => spread.sqrt(),
            SpreadConvention::Stddev => spread,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    /// Core dimensions `J`.
    #[serde(rename = "J")]
    pub core_shape: Vec<usize>,
    /// Observation dimensions `I`.
    #[serde(rename = "I")]
    pub observed_shape: Vec<usize>,
    pub support_size: usize,
    pub support_value_mean: f64,
    /// Spread of the support values around the mean, read per `convention`.
    pub support_value_spread: f64,
    /// Spread of the observation noise, read per `convention`.
    pub noise_spread: f64,
    pub convention: SpreadConvention,
    pub seed: u64,
    pub replicates: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            core_shape: vec![40, 40, 40],
            observed_shape: vec![28, 28, 28],
            support_size: 10,
            support_value_mean: 1.0,
            support_value_spread: 0.1,
            noise_spread: 0.005,
            convention: SpreadConvention::Stddev,
            seed: 0,
            replicates: 20,
        }
    }
}

impl ExperimentSpec {
    pub fn cube(order: usize, j: usize, i: usize) -> Self {
        Self {
            core_shape: vec![j; order],
            observed_shape: vec![i; order],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.core_shape.is_empty() || self.core_shape.len() != self.observed_shape.len() {
            return Err(Error::InvalidParameter(format!(
                "J {:?} and I {:?} must have the same non-zero length",
                self.core_shape, self.observed_shape
            )));
        }
        for (&j, &i) in self.core_shape.iter().zip(&self.observed_shape) {
            if i == 0 || j == 0 {
                return Err(Error::InvalidParameter("dimensions must be positive".into()));
            }
            if i > j {
                return Err(Error::InvalidParameter(format!("I exceeds J ({i} > {j})")));
            }
        }
        if self.support_size > self.core_shape.iter().product() {
            return Err(Error::InvalidParameter(format!(
                "support size {} exceeds core size",
                self.support_size
            )));
        }
        if !(self.support_value_spread >= 0.0) || !(self.noise_spread >= 0.0) {
            return Err(Error::InvalidParameter("spreads must be non-negative".into()));
        }
        Ok(())
    }

    pub fn value_std(&self) -> f64 {
        self.convention.to_std(self.support_value_spread)
    }

    pub fn noise_std(&self) -> f64 {
        self.convention.to_std(self.noise_spread)
    }

    /// The RNG for replicate `replicate`; depends on nothing else.
    pub fn replicate_rng(&self, replicate: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(replicate);
        rng
    }
}

/// `J × I` with orthonormal columns: thin QR of a standard Gaussian draw, with
/// column signs chosen so the triangular factor has a non-negative diagonal.
pub fn random_orthonormal_matrix<R: Rng + ?Sized>(j: usize, i: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if i > j {
        return Err(Error::InvalidParameter(format!("I exceeds J ({i} > {j})")));
    }
    if i == 0 {
        return Err(Error::InvalidParameter("I must be positive".into()));
    }
    let g = DMatrix::from_fn(j, i, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..i {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    Ok(q)
}

/// `k` indices drawn uniformly without replacement, valued `mean + std·N(0, 1)`.
pub fn random_sparse_core<R: Rng + ?Sized>(
    shape: &[usize],
    k: usize,
    mean: f64,
    std: f64,
    rng: &mut R,
) -> Result<(DenseTensor, SupportSet)> {
    let mut x = DenseTensor::zeros(shape)?;
    if k > x.len() {
        return Err(Error::InvalidParameter(format!(
            "support size {k} exceeds core size {}",
            x.len()
        )));
    }
    let mut picked = index::sample(rng, x.len(), k).into_vec();
    picked.sort_unstable();
    for &p in &picked {
        let z: f64 = rng.sample(StandardNormal);
        x.data_mut()[p] = mean + std * z;
    }
    let support = SupportSet::from_linear(shape, picked)?;
    Ok((x, support))
}

/// `forward(X)` plus i.i.d. `N(0, noise_std²)` entries.
pub fn observe<R: Rng + ?Sized>(
    x: &DenseTensor,
    f: &FactorSet,
    noise_std: f64,
    rng: &mut R,
) -> Result<DenseTensor> {
    let mut y = f.forward(x)?;
    if noise_std > 0.0 {
        for v in y.data_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += noise_std * z;
        }
    }
    Ok(y)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub replicate: u64,
    pub x_true: DenseTensor,
    pub support: SupportSet,
    pub factors: FactorSet,
    pub y: DenseTensor,
}

impl Instance {
    /// Hash of the observation and factor bits.
    pub fn checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for v in self.y.data() {
            v.to_bits().hash(&mut h);
        }
        for a in self.factors.factors() {
            for v in a.iter() {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

pub fn generate_instance(spec: &ExperimentSpec, replicate: u64) -> Result<Instance> {
    spec.validate()?;
    let mut rng = spec.replicate_rng(replicate);
    let factors = spec
        .core_shape
        .iter()
        .zip(&spec.observed_shape)
        .map(|(&j, &i)| random_orthonormal_matrix(j, i, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let factors = FactorSet::new(factors)?;
    let (x_true, support) = random_sparse_core(
        &spec.core_shape,
        spec.support_size,
        spec.support_value_mean,
        spec.value_std(),
        &mut rng,
    )?;
    let y = observe(&x_true, &factors, spec.noise_std(), &mut rng)?;
    Ok(Instance {
        replicate,
        x_true,
        support,
        factors,
        y,
    })
}

/// One method's outcome on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub replicate: u64,
    pub method: Method,
    pub frob_error: f64,
    pub support_precision: f64,
    pub support_recall: f64,
    pub support_f1: f64,
    pub support_size: usize,
    /// Wall-clock of the recovery call.
    pub wall_time_s: f64,
    pub stages: Vec<StageStats>,
    pub instance_checksum: u64,
}

pub fn evaluate(instance: &Instance, cfg: &RecoveryConfig, method: Method) -> Result<Metrics> {
    let clock = Instant::now();
    let res = recover(&instance.y, &instance.factors, cfg, method)?;
    let wall_time_s = clock.elapsed().as_secs_f64();
    let scores = support_scores(&instance.support, &res.support);
    Ok(Metrics {
        replicate: instance.replicate,
        method,
        frob_error: frobenius_error(&instance.x_true, &res.estimate)?,
        support_precision: scores.precision,
        support_recall: scores.recall,
        support_f1: scores.f1,
        support_size: res.support.len(),
        wall_time_s,
        stages: res.stages,
        instance_checksum: instance.checksum(),
    })
}

/// Runs every method on every replicate; rows are ordered by replicate, then method.
/// `threads > 1` spreads replicates over a worker pool.
pub fn run_experiment(
    spec: &ExperimentSpec,
    methods: &[Method],
    cfg: &RecoveryConfig,
    threads: usize,
) -> Result<Vec<Metrics>> {
    spec.validate()?;
    cfg.validate()?;
    let run_one = |r: u64| -> Result<Vec<Metrics>> {
        let inst = generate_instance(spec, r)?;
        methods.iter().map(|&m| evaluate(&inst, cfg, m)).collect()
    };
    let reps: Vec<u64> = (0..spec.replicates as u64).collect();
    let per_rep: Vec<Result<Vec<Metrics>>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| reps.par_iter().map(|&r| run_one(r)).collect())
    } else {
        reps.iter().map(|&r| run_one(r)).collect()
    };
    let mut rows = Vec::with_capacity(spec.replicates * methods.len());
    for r in per_rep {
        rows.extend(r?);
    }
    Ok(rows)
}
