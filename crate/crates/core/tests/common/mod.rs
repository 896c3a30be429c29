//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls the library's mode products, Kronecker builder or
//! solvers; everything is loops over explicit indices or dense nalgebra.
#![allow(dead_code)]

pub mod props;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_tucker::{DenseTensor, FactorSet};

/// Column-major linear index (mode 0 fastest).
pub fn lin(shape: &[usize], idx: &[usize]) -> usize {
    let mut k = 0;
    let mut stride = 1;
    for (&i, &d) in idx.iter().zip(shape) {
        k += i * stride;
        stride *= d;
    }
    k
}

/// All multi-indices of `shape` in storage order.
pub fn all_indices(shape: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = shape.iter().product();
    (0..total)
        .map(|mut k| {
            shape
                .iter()
                .map(|&d| {
                    let i = k % d;
                    k /= d;
                    i
                })
                .collect()
        })
        .collect()
}

/// `(X ×ₙ M)[i] = Σ_j M[iₙ, j] · X[i with iₙ := j]`.
pub fn naive_mode_product(x: &DenseTensor, m: &DMatrix<f64>, mode: usize) -> DenseTensor {
    let mut shape = x.shape().to_vec();
    shape[mode] = m.nrows();
    let mut out = vec![0.0; shape.iter().product()];
    for idx in all_indices(&shape) {
        let mut src = idx.clone();
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            src[mode] = j;
            acc += m[(idx[mode], j)] * x.data()[lin(x.shape(), &src)];
        }
        out[lin(&shape, &idx)] = acc;
    }
    DenseTensor::new(shape, out).unwrap()
}

/// Sensing matrix `Φ` with `vec(forward X) = Φ vec X`, entry by entry:
/// `Φ[lin(i), lin(j)] = Πₙ Aₙ[jₙ, iₙ]`.
pub fn brute_sensing(f: &FactorSet) -> DMatrix<f64> {
    let core = f.core_shape();
    let obs = f.observed_shape();
    let rows = all_indices(&obs);
    let cols = all_indices(&core);
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        f.factors()
            .iter()
            .enumerate()
            .map(|(n, a)| a[(cols[c][n], rows[r][n])])
            .product()
    })
}

pub fn vec_of(t: &DenseTensor) -> DVector<f64> {
    DVector::from_column_slice(t.data())
}

pub fn soft(v: f64, thr: f64) -> f64 {
    v.signum() * (v.abs() - thr).max(0.0)
}

/// Plain vectorised FISTA on `min ‖x‖₁ + (λ/2)‖y − Φx‖²`, returning `X₁ … X_iters`.
pub fn vector_fista(phi: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, l: f64, iters: usize) -> Vec<DVector<f64>> {
    let phit = phi.transpose();
    let mut x_prev = &phit * y;
    let mut z = x_prev.clone();
    let mut d = 1.0f64;
    let thr = 1.0 / (lambda * l);
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        let g = &z - (&phit * (phi * &z - y)) / l;
        let x = g.map(|v| soft(v, thr));
        let d_next = 0.5 * (1.0 + (1.0 + 4.0 * d * d).sqrt());
        z = &x + (&x - &x_prev) * ((d - 1.0) / d_next);
        d = d_next;
        x_prev = x.clone();
        out.push(x);
    }
    out
}

/// Householder-QR least squares on the columns of `Φ` listed in `cols`, plus
/// the condition number of that column block.
pub fn restricted_least_squares(phi: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> (DVector<f64>, f64) {
    let sub = DMatrix::from_fn(phi.nrows(), cols.len(), |r, c| phi[(r, cols[c])]);
    let sv = sub.singular_values();
    let cond = sv.max() / sv.min();
    let qr = sub.qr();
    let rhs = qr.q().transpose() * y;
    let x = qr.r().solve_upper_triangular(&rhs).expect("restricted sensing matrix has full column rank");
    (x, cond)
}

/// Gaussian matrix orthonormalised by Gram-Schmidt (twice, for stability).
pub fn orthonormal(j: usize, i: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let mut m: DMatrix<f64> = DMatrix::from_fn(j, i, |_, _| StandardNormal.sample(rng));
    for _ in 0..2 {
        for c in 0..i {
            for p in 0..c {
                let proj: f64 = m.column(p).dot(&m.column(c));
                let prev = m.column(p).clone_owned();
                m.column_mut(c).axpy(-proj, &prev, 1.0);
            }
            let n = m.column(c).norm();
            m.column_mut(c).scale_mut(1.0 / n);
        }
    }
    m
}

pub fn factor_set(core: &[usize], obs: &[usize], seed: u64) -> FactorSet {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    FactorSet::new(core.iter().zip(obs).map(|(&j, &i)| orthonormal(j, i, &mut rng)).collect()).unwrap()
}

pub fn gaussian_tensor(shape: &[usize], rng: &mut ChaCha20Rng) -> DenseTensor {
    let n = shape.iter().product();
    DenseTensor::new(shape.to_vec(), (0..n).map(|_| StandardNormal.sample(rng)).collect()).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Shapes with 1 to 4 modes, each of size 1 to 5.
pub fn small_shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=5, 1..=4)
}

pub fn tensor_of(shape: Vec<usize>) -> impl Strategy<Value = DenseTensor> {
    let n = shape.iter().product::<usize>();
    prop::collection::vec(-10.0f64..10.0, n).prop_map(move |d| DenseTensor::new(shape.clone(), d).unwrap())
}

pub fn any_tensor() -> impl Strategy<Value = DenseTensor> {
    small_shape().prop_flat_map(tensor_of)
}

/// Order-3 factor set with `2 ≤ Iₙ ≤ Jₙ ≤ 5` and a seed for data.
pub fn factor_problem() -> impl Strategy<Value = (FactorSet, u64)> {
    (prop::collection::vec((2usize..=5, 0usize..=3), 3), any::<u64>()).prop_map(|(dims, seed)| {
        let core: Vec<usize> = dims.iter().map(|&(j, _)| j).collect();
        let obs: Vec<usize> = dims.iter().map(|&(j, d)| j.saturating_sub(d).max(2).min(j)).collect();
        (factor_set(&core, &obs, seed), seed)
    })
}
