//! The Tucker sensing operator defined by a set of orthonormal-column factors.
//!
//! Factor `n` is `Jₙ × Iₙ`. The forward map compresses a core of shape `J` to
//! an observation of shape `I` by applying `Aₙᵀ` along every mode; the adjoint
//! expands back by applying `Aₙ`. With `P = A_{N-1} ⊗ … ⊗ A₀` this is
//! `vec(forward(X)) = Pᵀ vec(X)` and `vec(adjoint(Y)) = P vec(Y)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Largest allowed `‖AₙᵀAₙ − I‖_F` for an accepted factor.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<DMatrix<f64>>,
    transposed: Vec<DMatrix<f64>>,
}

impl FactorSet {
    /// Validates shapes (`Iₙ ≤ Jₙ`) and column orthonormality of every factor.
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidShape("factor set is empty".into()));
        }
        for (n, a) in factors.iter().enumerate() {
            if a.ncols() == 0 || a.nrows() < a.ncols() {
                return Err(Error::InvalidShape(format!(
                    "factor {n} is {}x{}; need 1 <= I <= J",
                    a.nrows(),
                    a.ncols()
                )));
            }
            let gram_err = (a.transpose() * a - DMatrix::identity(a.ncols(), a.ncols())).norm();
            if !(gram_err <= ORTHONORMAL_TOL) {
                return Err(Error::InvalidParameter(format!(
                    "factor {n} columns are not orthonormal (|AᵀA - I|_F = {gram_err:.3e})"
                )));
            }
        }
        let transposed = factors.iter().map(|a| a.transpose()).collect();
        Ok(Self {
            factors,
            transposed,
        })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    /// Core dimensions `J`.
    pub fn core_shape(&self) -> Vec<usize> {
        self.factors.iter().map(|a| a.nrows()).collect()
    }

    /// Observation dimensions `I`.
    pub fn observed_shape(&self) -> Vec<usize> {
        self.factors.iter().map(|a| a.ncols()).collect()
    }

    /// Number of stored operator entries, `Σ JₙIₙ`.
    pub fn operator_entries(&self) -> usize {
        self.factors.iter().map(|a| a.len()).sum()
    }

    /// Bytes held by the factor matrices (transposed copies excluded).
    pub fn storage_bytes(&self) -> usize {
        self.operator_entries() * std::mem::size_of::<f64>()
    }

    /// `X ×₀ A₀ᵀ ×₁ A₁ᵀ …`: core shape `J` to observation shape `I`.
    pub fn forward(&self, x: &DenseTensor) -> Result<DenseTensor> {
        multi_mode_product(x, self, false)
    }

    /// `Y ×₀ A₀ ×₁ A₁ …`: observation shape `I` to core shape `J`.
    pub fn adjoint(&self, y: &DenseTensor) -> Result<DenseTensor> {
        multi_mode_product(y, self, true)
    }
}

/// Applies every factor in turn. `adjoint = false` multiplies mode `n` by `Aₙᵀ`
/// (needs mode sizes `Jₙ`); `adjoint = true` multiplies by `Aₙ` (needs `Iₙ`).
pub fn multi_mode_product(x: &DenseTensor, f: &FactorSet, adjoint: bool) -> Result<DenseTensor> {
    if x.order() != f.order() {
        return Err(Error::DimensionMismatch(format!(
            "order-{} tensor against {} factors",
            x.order(),
            f.order()
        )));
    }
    let mats = if adjoint { &f.factors } else { &f.transposed };
    let mut out: Option<DenseTensor> = None;
    for (n, m) in mats.iter().enumerate() {
        let src = out.as_ref().unwrap_or(x);
        if src.shape()[n] != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "mode {n} has size {} but the {} map expects {}",
                src.shape()[n],
                if adjoint { "adjoint" } else { "forward" },
                m.ncols()
            )));
        }
        out = Some(src.mode_product(m, n)?);
    }
    Ok(out.expect("factor set is non-empty"))
}
