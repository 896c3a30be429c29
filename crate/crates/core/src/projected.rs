//! Stage III: FISTA with support projections.
//!
//! Every pass computes `Xₜ` as in Stage I, then in this order:
//! adds `supp_tol(Xₜ)` to the working support, drops indices that have been
//! below `tol` for `R` consecutive passes, and zeroes `Xₜ` off the support.

use std::collections::HashMap;
use std::time::Instant;

use crate::config::RecoveryConfig;
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::fista::{
    check_observation, effective_support, objective, prox_gradient, FistaState, RecoveryResult,
    Stage, StageStats, StopRule,
};
use crate::support::SupportSet;
use crate::tensor::DenseTensor;

/// `R` value that disables pruning.
pub const NO_PRUNING: usize = usize::MAX;

/// Consecutive below-`tol` counters, kept only for indices in the working support.
#[derive(Debug, Clone, Default)]
pub struct PruneTracker {
    below_count: HashMap<usize, usize>,
}

impl PruneTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, k: usize) -> usize {
        self.below_count.get(&k).copied().unwrap_or(0)
    }

    pub fn tracked(&self) -> usize {
        self.below_count.len()
    }

    /// Updates the counter of every support index against `x` and removes from
    /// `support` those whose counter reaches `window`. Returns the removed indices.
    pub fn prune(
        &mut self,
        support: &mut SupportSet,
        x: &DenseTensor,
        tol: f64,
        window: usize,
    ) -> Vec<usize> {
        let mut removed = Vec::new();
        for k in support.iter() {
            let c = self.below_count.entry(k).or_insert(0);
            if x.data()[k].abs() < tol {
                *c += 1;
            } else {
                *c = 0;
            }
            if *c >= window {
                removed.push(k);
            }
        }
        for &k in &removed {
            support.remove(k);
            self.below_count.remove(&k);
        }
        removed
    }
}

#[derive(Debug, Clone)]
pub struct StepReport {
    /// `‖Xₜ − Xₜ₋₁‖_F` after projection.
    pub change: f64,
    pub added: usize,
    pub pruned: Vec<usize>,
    /// `Xₜ` before the complement was zeroed, when requested.
    pub unprojected: Option<DenseTensor>,
}

/// Stage III as an explicit stepper, so callers can inspect every pass.
#[derive(Debug, Clone)]
pub struct ProjectedFista<'a> {
    y: &'a DenseTensor,
    f: &'a FactorSet,
    cfg: &'a RecoveryConfig,
    state: FistaState,
    support: SupportSet,
    tracker: PruneTracker,
    iterations: usize,
    keep_unprojected: bool,
}

impl<'a> ProjectedFista<'a> {
    /// Starts from `X₀ = Z₁ = start` with working support `omega0`.
    pub fn new(
        y: &'a DenseTensor,
        f: &'a FactorSet,
        omega0: SupportSet,
        start: DenseTensor,
        cfg: &'a RecoveryConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        check_observation(y, f)?;
        if omega0.shape() != f.core_shape().as_slice() || start.shape() != omega0.shape() {
            return Err(Error::DimensionMismatch(format!(
                "support grid {:?} / start {:?} do not match core shape {:?}",
                omega0.shape(),
                start.shape(),
                f.core_shape()
            )));
        }
        Ok(Self {
            y,
            f,
            cfg,
            state: FistaState::new(start),
            support: omega0,
            tracker: PruneTracker::new(),
            iterations: 0,
            keep_unprojected: false,
        })
    }

    pub fn keep_unprojected(mut self, keep: bool) -> Self {
        self.keep_unprojected = keep;
        self
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let tol = self.cfg.tol;
        let mut x = prox_gradient(&self.state.z, self.y, self.f, self.cfg)?;
        self.iterations += 1;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                stage: "projected fista",
                iteration: self.iterations,
            });
        }
        let mut added = 0;
        for (k, v) in x.data().iter().enumerate() {
            if v.abs() > tol && self.support.insert(k) {
                added += 1;
            }
        }
        let pruned = self
            .tracker
            .prune(&mut self.support, &x, tol, self.cfg.prune_window);
        let unprojected = self.keep_unprojected.then(|| x.clone());
        for (v, &keep) in x.data_mut().iter_mut().zip(self.support.mask()) {
            if !keep {
                *v = 0.0;
            }
        }
        let change = self.state.advance(x);
        Ok(StepReport {
            change,
            added,
            pruned,
            unprojected,
        })
    }

    pub fn iterate(&self) -> &DenseTensor {
        &self.state.x_curr
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn tracker(&self) -> &PruneTracker {
        &self.tracker
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Steps until the stopping rule fires; returns `(X^FISTA2, Ω̃, iterations, objective trace)`.
    fn run(mut self) -> Result<(DenseTensor, SupportSet, usize, Vec<f64>)> {
        let stop = StopRule::stage(self.cfg, self.y);
        let mut trace = Vec::new();
        loop {
            let report = self.step()?;
            if self.cfg.record_objective {
                trace.push(objective(self.iterate(), self.y, self.f, self.cfg.lambda)?);
            }
            if stop.done(self.iterations, report.change) {
                break;
            }
        }
        Ok((self.state.x_curr, self.support, self.iterations, trace))
    }
}

/// Output of Stage III: the final iterate plus the working support it ended with.
#[derive(Debug, Clone)]
pub struct ProjectedOutcome {
    pub result: RecoveryResult,
    /// Final `Ω̃` (a superset of `result.support`).
    pub working_support: SupportSet,
}

/// Stage III from the printed initialisation `X₀ = Z₁ = adjoint(Y)`.
pub fn fista_with_projection(
    y: &DenseTensor,
    f: &FactorSet,
    omega0: &SupportSet,
    cfg: &RecoveryConfig,
) -> Result<ProjectedOutcome> {
    check_observation(y, f)?;
    fista_with_projection_from(y, f, omega0, f.adjoint(y)?, cfg)
}

/// Stage III from an explicit starting point (e.g. the augmented estimate).
pub fn fista_with_projection_from(
    y: &DenseTensor,
    f: &FactorSet,
    omega0: &SupportSet,
    start: DenseTensor,
    cfg: &RecoveryConfig,
) -> Result<ProjectedOutcome> {
    let clock = Instant::now();
    let solver = ProjectedFista::new(y, f, omega0.clone(), start, cfg)?;
    let (estimate, working_support, iterations, trace) = solver.run()?;
    Ok(ProjectedOutcome {
        result: RecoveryResult {
            support: effective_support(&estimate, cfg.tol),
            estimate,
            stages: vec![StageStats {
                stage: Stage::ProjectedFista,
                iterations,
                seconds: clock.elapsed().as_secs_f64(),
            }],
            objective_trace: trace,
        },
        working_support,
    })
}
