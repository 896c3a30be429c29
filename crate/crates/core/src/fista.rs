//! Stage I: N-mode FISTA for `min ‖U‖₁ + (λ/2)‖Y − forward(U)‖²_F`.
//!
//! Each pass computes `Xₜ = prox_{1/(λL)}(Zₜ − (1/L)·adjoint(forward(Zₜ) − Y))`,
//! then extrapolates `Zₜ₊₁ = Xₜ + ((dₜ − 1)/dₜ₊₁)(Xₜ − Xₜ₋₁)` with
//! `dₜ₊₁ = (1 + √(1 + 4dₜ²))/2`, starting from `X₀ = Z₁ = adjoint(Y)` and `d₁ = 1`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::RecoveryConfig;
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::support::SupportSet;
use crate::tensor::DenseTensor;

/// Elementwise `sign(u)·max(|u| − alpha, 0)`.
pub fn soft_threshold(u: &DenseTensor, alpha: f64) -> Result<DenseTensor> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "soft-threshold level must be non-negative, got {alpha}"
        )));
    }
    Ok(u.map(|v| shrink(v, alpha)))
}

#[inline]
fn shrink(v: f64, alpha: f64) -> f64 {
    let m = v.abs() - alpha;
    if m > 0.0 {
        m.copysign(v)
    } else {
        0.0
    }
}

/// `‖U‖₁ + (λ/2)‖Y − forward(U)‖²_F`.
pub fn objective(u: &DenseTensor, y: &DenseTensor, f: &FactorSet, lambda: f64) -> Result<f64> {
    let resid = y.sub(&f.forward(u)?)?;
    let r = resid.frobenius_norm();
    Ok(u.l1_norm() + 0.5 * lambda * r * r)
}

/// `{ j : |X(j)| > tol }`.
pub fn effective_support(x: &DenseTensor, tol: f64) -> SupportSet {
    let mut s = SupportSet::empty(x.shape());
    for (k, v) in x.data().iter().enumerate() {
        if v.abs() > tol {
            s.insert(k);
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Fista,
    Augment,
    ProjectedFista,
    Postprocess,
    KroneckerLeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub stage: Stage,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub estimate: DenseTensor,
    /// `effective_support(estimate, tol)`.
    pub support: SupportSet,
    pub stages: Vec<StageStats>,
    /// Objective values after each Stage I / III pass, when recording is enabled.
    pub objective_trace: Vec<f64>,
}

impl RecoveryResult {
    pub fn total_seconds(&self) -> f64 {
        self.stages.iter().map(|s| s.seconds).sum()
    }

    pub fn iterations(&self, stage: Stage) -> usize {
        self.stages
            .iter()
            .filter(|s| s.stage == stage)
            .map(|s| s.iterations)
            .sum()
    }
}

/// Momentum bookkeeping shared by every accelerated stage.
#[derive(Debug, Clone)]
pub struct FistaState {
    pub d: f64,
    pub x_prev: DenseTensor,
    pub x_curr: DenseTensor,
    pub z: DenseTensor,
    pub t: usize,
}

impl FistaState {
    /// `X₀ = Z₁ = x0`, `d₁ = 1`, `t = 1`.
    pub fn new(x0: DenseTensor) -> Self {
        Self::with_extrapolated(x0.clone(), x0)
    }

    pub fn with_extrapolated(x0: DenseTensor, z1: DenseTensor) -> Self {
        Self {
            d: 1.0,
            x_prev: x0.clone(),
            x_curr: x0,
            z: z1,
            t: 1,
        }
    }

    /// Accepts `Xₜ` (computed from the current `Zₜ`), performs the momentum and
    /// extrapolation updates and returns `‖Xₜ − Xₜ₋₁‖_F`.
    pub fn advance(&mut self, x_next: DenseTensor) -> f64 {
        self.x_prev = std::mem::replace(&mut self.x_curr, x_next);
        let d_next = 0.5 * (1.0 + (1.0 + 4.0 * self.d * self.d).sqrt());
        let coef = (self.d - 1.0) / d_next;
        let mut change = 0.0;
        let z = self.z.data_mut();
        for ((zk, &xc), &xp) in z
            .iter_mut()
            .zip(self.x_curr.data())
            .zip(self.x_prev.data())
        {
            let diff = xc - xp;
            change += diff * diff;
            *zk = xc + coef * diff;
        }
        self.d = d_next;
        self.t += 1;
        change.sqrt()
    }
}

/// Iteration limit plus the absolute change threshold resolved against `‖Y‖_F`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StopRule {
    pub max_iters: usize,
    pub threshold: f64,
}

impl StopRule {
    pub fn stage(cfg: &RecoveryConfig, y: &DenseTensor) -> Self {
        Self {
            max_iters: cfg.max_iters,
            threshold: cfg.change_tol * y.frobenius_norm(),
        }
    }

    pub fn postprocess(cfg: &RecoveryConfig, y: &DenseTensor) -> Self {
        Self {
            max_iters: cfg.pp_max_iters,
            threshold: cfg.pp_change_tol * y.frobenius_norm(),
        }
    }

    /// An exact fixed point (`change == 0`) also stops.
    pub fn done(&self, iterations: usize, change: f64) -> bool {
        iterations >= self.max_iters || change < self.threshold || change == 0.0
    }
}

/// `Z − step·adjoint(forward(Z) − Y)`.
pub(crate) fn gradient_step(
    z: &DenseTensor,
    y: &DenseTensor,
    f: &FactorSet,
    step: f64,
) -> Result<DenseTensor> {
    let resid = f.forward(z)?.sub(y)?;
    let mut out = z.clone();
    out.axpy(-step, &f.adjoint(&resid)?)?;
    Ok(out)
}

pub(crate) fn check_observation(y: &DenseTensor, f: &FactorSet) -> Result<()> {
    if y.shape() != f.observed_shape().as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "observation shape {:?} does not match factor columns {:?}",
            y.shape(),
            f.observed_shape()
        )));
    }
    Ok(())
}

/// One Stage I pass from `Zₜ`: gradient step then soft threshold.
pub(crate) fn prox_gradient(
    z: &DenseTensor,
    y: &DenseTensor,
    f: &FactorSet,
    cfg: &RecoveryConfig,
) -> Result<DenseTensor> {
    let mut g = gradient_step(z, y, f, 1.0 / cfg.step_constant)?;
    let thr = cfg.prox_threshold();
    for v in g.data_mut() {
        *v = shrink(*v, thr);
    }
    Ok(g)
}

/// Runs Stage I to the stopping rule and returns the final iterate `X^FISTA`.
pub fn fista_recover(y: &DenseTensor, f: &FactorSet, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    cfg.validate()?;
    check_observation(y, f)?;
    let start = Instant::now();
    let stop = StopRule::stage(cfg, y);
    let mut state = FistaState::new(f.adjoint(y)?);
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let x = prox_gradient(&state.z, y, f, cfg)?;
        iterations += 1;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                stage: "fista",
                iteration: iterations,
            });
        }
        if cfg.record_objective {
            trace.push(objective(&x, y, f, cfg.lambda)?);
        }
        let change = state.advance(x);
        if stop.done(iterations, change) {
            break;
        }
    }
    let estimate = state.x_curr;
    Ok(RecoveryResult {
        support: effective_support(&estimate, cfg.tol),
        estimate,
        stages: vec![StageStats {
            stage: Stage::Fista,
            iterations,
            seconds: start.elapsed().as_secs_f64(),
        }],
        objective_trace: trace,
    })
}
