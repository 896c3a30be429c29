//! Explicit Kronecker operator, for oracle checks and the matrix-vector baseline only.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::factors::FactorSet;

/// Default ceiling on the number of entries of an explicit Kronecker operator.
pub const DEFAULT_KRON_GUARD: u128 = 100_000_000;

/// `A ⊗ B`: the block matrix whose `(i, j)` block is `a_ij · B`.
pub fn kronecker_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
        }
    }
    out
}

/// Entry count of `P = A_{N-1} ⊗ … ⊗ A₀`, i.e. `Π Jₙ Iₙ`.
pub fn kronecker_entries(f: &FactorSet) -> u128 {
    f.factors().iter().map(|a| a.len() as u128).product()
}

pub fn check_guard(f: &FactorSet, guard: u128) -> Result<()> {
    let entries = kronecker_entries(f);
    if entries > guard {
        return Err(Error::SizeGuard { entries, guard });
    }
    Ok(())
}

/// `P = A_{N-1} ⊗ … ⊗ A₀`, of size `ΠJₙ × ΠIₙ`, so that `vec(forward(X)) = Pᵀ vec(X)`.
///
/// Refuses with [`Error::SizeGuard`] when `Π JₙIₙ` exceeds `guard`.
pub fn kronecker_operator(f: &FactorSet, guard: u128) -> Result<DMatrix<f64>> {
    check_guard(f, guard)?;
    let mut iter = f.factors().iter();
    let mut p = iter.next().expect("factor set is non-empty").clone();
    for a in iter {
        p = kronecker_product(a, &p);
    }
    Ok(p)
}
