use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kron::DEFAULT_KRON_GUARD;

/// How Stage II picks the value written onto newly added candidate indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaPolicy {
    /// Median magnitude of the estimate over its support; `(a + b) / 2` when the support is empty.
    MedianOfSupport,
    Fixed(f64),
}

/// Every scalar knob of the four recovery stages. Field names double as the
/// flat keys of JSON config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    /// Data-fit weight of the ℓ1-regularised objective.
    pub lambda: f64,
    /// Step constant; gradient steps are `1/L`, the prox threshold `1/(λL)`.
    #[serde(rename = "L")]
    pub step_constant: f64,
    /// Effective-support threshold.
    pub tol: f64,
    pub max_iters: usize,
    /// Stop once `‖Xₜ − Xₜ₋₁‖_F < change_tol · ‖Y‖_F`.
    pub change_tol: f64,
    /// Lower edge of the ambiguous magnitude band.
    pub a: f64,
    /// Upper edge of the ambiguous magnitude band.
    pub b: f64,
    /// Two band indices closer than this form a cluster.
    pub gamma: f64,
    /// Radius of the closed ball added around each cluster index.
    pub r: f64,
    pub alpha_policy: AlphaPolicy,
    /// Pruning window: an index below `tol` this many iterations in a row leaves the support.
    #[serde(rename = "R")]
    pub prune_window: usize,
    /// Seed Stage III's extrapolated iterate with the augmented estimate instead of `adjoint(Y)`.
    pub warm_start_from_augmented: bool,
    /// Stage IV gradient step is `pp_lambda / L`.
    pub pp_lambda: f64,
    pub pp_max_iters: usize,
    /// Stage IV stops once `‖Xₜ − Xₜ₋₁‖_F < pp_change_tol · ‖Y‖_F`.
    pub pp_change_tol: f64,
    pub record_objective: bool,
    /// Entry ceiling for explicit Kronecker operators.
    pub kron_guard: u128,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            lambda: 500.0,
            step_constant: 1.0,
            tol: 0.05,
            max_iters: 500,
            change_tol: 1e-6,
            a: 0.05,
            b: 0.5,
            gamma: 2.0,
            r: 1.5,
            alpha_policy: AlphaPolicy::MedianOfSupport,
            prune_window: 20,
            warm_start_from_augmented: false,
            pp_lambda: 1.0,
            pp_max_iters: 1000,
            pp_change_tol: 1e-10,
            record_objective: false,
            kron_guard: DEFAULT_KRON_GUARD,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda", self.lambda),
            ("L", self.step_constant),
            ("gamma", self.gamma),
            ("r", self.r),
            ("pp_lambda", self.pp_lambda),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("tol", self.tol),
            ("change_tol", self.change_tol),
            ("pp_change_tol", self.pp_change_tol),
            ("a", self.a),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(self.a < self.b) {
            return Err(Error::InvalidParameter(format!(
                "band needs a < b, got a={} b={}",
                self.a, self.b
            )));
        }
        if self.max_iters == 0 || self.pp_max_iters == 0 || self.prune_window == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits and R must be at least 1".into(),
            ));
        }
        if let AlphaPolicy::Fixed(v) = self.alpha_policy {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("alpha must be finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Prox threshold `1/(λL)` used by Stages I and III.
    pub fn prox_threshold(&self) -> f64 {
        1.0 / (self.lambda * self.step_constant)
    }
}
