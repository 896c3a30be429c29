//! Stage IV: least squares restricted to a support set, to undo shrinkage.
//!
//! [`iterative_postprocess`] stays in tensor form: accelerated gradient steps on
//! `‖forward(U) − Y‖²_F` with `U` forced to zero off the support. The matrix-vector
//! baseline [`kronecker_least_squares`] materialises the Kronecker operator and
//! solves the same problem densely.

use nalgebra::{DMatrix, DVector};

use crate::config::RecoveryConfig;
use crate::error::{Error, Result};
use crate::factors::FactorSet;
use crate::fista::{check_observation, gradient_step, FistaState, StopRule};
use crate::kron::kronecker_operator;
use crate::support::SupportSet;
use crate::tensor::DenseTensor;

#[derive(Debug, Clone)]
pub struct PostprocessOutcome {
    /// Final iterate with entries `|x| ≤ tol` zeroed.
    pub estimate: DenseTensor,
    /// Final iterate before output thresholding (supported on the input support).
    pub unthresholded: DenseTensor,
    pub iterations: usize,
}

fn check_support(support: &SupportSet, f: &FactorSet) -> Result<()> {
    if support.shape() != f.core_shape().as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "support grid {:?} does not match core shape {:?}",
            support.shape(),
            f.core_shape()
        )));
    }
    Ok(())
}

fn zero_outside(x: &mut DenseTensor, support: &SupportSet) {
    for (v, &keep) in x.data_mut().iter_mut().zip(support.mask()) {
        if !keep {
            *v = 0.0;
        }
    }
}

/// Support-restricted accelerated least squares started from `x0`.
///
/// Step size is `cfg.pp_lambda / cfg.L`; stops on `cfg.pp_max_iters` or
/// `‖Xₜ − Xₜ₋₁‖_F < cfg.pp_change_tol · ‖Y‖_F`.
pub fn iterative_postprocess(
    y: &DenseTensor,
    f: &FactorSet,
    x0: &DenseTensor,
    support: &SupportSet,
    cfg: &RecoveryConfig,
) -> Result<PostprocessOutcome> {
    cfg.validate()?;
    check_observation(y, f)?;
    check_support(support, f)?;
    if x0.shape() != support.shape() {
        return Err(Error::DimensionMismatch(format!(
            "start {:?} does not match support grid {:?}",
            x0.shape(),
            support.shape()
        )));
    }
    let step = cfg.pp_lambda / cfg.step_constant;
    let stop = StopRule::postprocess(cfg, y);
    let mut start = x0.clone();
    zero_outside(&mut start, support);
    let mut state = FistaState::new(start);
    let mut iterations = 0;
    loop {
        let mut x = gradient_step(&state.z, y, f, step)?;
        zero_outside(&mut x, support);
        iterations += 1;
        if !x.is_finite() {
            return Err(Error::NonFinite {
                stage: "postprocess",
                iteration: iterations,
            });
        }
        let change = state.advance(x);
        if stop.done(iterations, change) {
            break;
        }
    }
    let unthresholded = state.x_curr;
    let tol = cfg.tol;
    let estimate = unthresholded.map(|v| if v.abs() > tol { v } else { 0.0 });
    Ok(PostprocessOutcome {
        estimate,
        unthresholded,
        iterations,
    })
}

const REFINEMENT_STEPS: usize = 2;

#[derive(Debug, Clone)]
pub struct KroneckerLsOutcome {
    pub estimate: DenseTensor,
    /// Numerical rank of the restricted sensing matrix.
    pub rank: usize,
    /// `rank < |Ω|`; the minimum-norm solution was returned.
    pub rank_deficient: bool,
}

/// Dense least squares `min_x ‖vec(Y) − (Pᵀ)_Ω x‖²` scattered back onto `Ω`.
///
/// `(Pᵀ)_Ω` holds the columns of the sensing matrix `Pᵀ` indexed by the support.
/// Refuses with [`Error::SizeGuard`] when `P` would exceed `guard` entries.
pub fn kronecker_least_squares(
    y: &DenseTensor,
    f: &FactorSet,
    support: &SupportSet,
    guard: u128,
) -> Result<KroneckerLsOutcome> {
    check_observation(y, f)?;
    check_support(support, f)?;
    let p = kronecker_operator(f, guard)?;
    let mut estimate = DenseTensor::zeros(support.shape())?;
    let cols: Vec<usize> = support.iter().collect();
    if cols.is_empty() {
        return Ok(KroneckerLsOutcome {
            estimate,
            rank: 0,
            rank_deficient: false,
        });
    }
    let sensing = DMatrix::from_fn(p.ncols(), cols.len(), |i, j| p[(cols[j], i)]);
    let rhs = y.vectorize();
    let largest_dim = sensing.nrows().max(sensing.ncols()) as f64;
    let svd = sensing.clone().svd(true, true);
    let eps = f64::EPSILON * largest_dim * svd.singular_values.max();
    let rank = svd.rank(eps);
    let pinv = |b: &DVector<f64>| {
        svd.solve(b, eps)
            .map_err(|e| Error::InvalidParameter(format!("least-squares solve failed: {e}")))
    };
    // the SVD factors carry ~1e-11 reconstruction error; refinement restores full precision
    let mut x = pinv(&rhs)?;
    for _ in 0..REFINEMENT_STEPS {
        let r = &rhs - &sensing * &x;
        x += pinv(&r)?;
    }
    for (j, &k) in cols.iter().enumerate() {
        estimate.data_mut()[k] = x[j];
    }
    Ok(KroneckerLsOutcome {
        estimate,
        rank,
        rank_deficient: rank < cols.len(),
    })
}
