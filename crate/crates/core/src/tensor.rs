//! Dense N-way arrays with mode-n algebra.
//!
//! Storage is mode-0-fastest (the column-major generalisation), so `vectorize`
//! is the column-stacking `vec` and `vec(X ×₀ M₀ ×₁ M₁ … ) = (M_{N-1} ⊗ … ⊗ M₀) vec(X)`.
//! Modes are 0-based throughout the crate.

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::InvalidShape("tensor order must be at least 1".into()));
    }
    if shape.iter().any(|&d| d == 0) {
        return Err(Error::InvalidShape(format!("zero-sized mode in {shape:?}")));
    }
    Ok(shape.iter().product())
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = check_shape(&shape)?;
        if data.len() != len {
            return Err(Error::InvalidShape(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        let len = check_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        })
    }

    /// Builds a tensor by evaluating `f` at every multi-index, in storage order.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = check_shape(shape)?;
        let mut idx = vec![0usize; shape.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            advance(&mut idx, shape);
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        linear_index(&self.shape, idx)
    }

    pub fn multi_index(&self, linear: usize) -> Vec<usize> {
        multi_index(&self.shape, linear)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let k = self.linear_index(idx);
        self.data[k] = value;
    }

    /// Column-stacking vectorisation (same order as storage).
    pub fn vectorize(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sum of elementwise products.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(())
    }

    /// `self - other`.
    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data,
        })
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &DenseTensor) -> Result<()> {
        self.same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.order() {
            return Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            });
        }
        Ok(())
    }

    /// Mode-`mode` matricisation: row `j` holds every entry whose mode coordinate is `j`,
    /// the other modes linearised in ascending order (mode 0 fastest).
    pub fn unfold(&self, mode: usize) -> Result<DMatrix<f64>> {
        self.check_mode(mode)?;
        let (left, dim, right) = split_dims(&self.shape, mode);
        let mut out = DMatrix::zeros(dim, left * right);
        for r in 0..right {
            for j in 0..dim {
                let base = left * (j + dim * r);
                for l in 0..left {
                    out[(j, l + left * r)] = self.data[base + l];
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::unfold`] for the given shape and mode.
    pub fn fold(matrix: &DMatrix<f64>, mode: usize, shape: &[usize]) -> Result<DenseTensor> {
        let mut out = DenseTensor::zeros(shape)?;
        out.check_mode(mode)?;
        let (left, dim, right) = split_dims(shape, mode);
        if matrix.nrows() != dim || matrix.ncols() != left * right {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix cannot fold into mode {mode} of {shape:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        for r in 0..right {
            for j in 0..dim {
                let base = left * (j + dim * r);
                for l in 0..left {
                    out.data[base + l] = matrix[(j, l + left * r)];
                }
            }
        }
        Ok(out)
    }

    /// `X ×ₙ M`: multiplies every mode-`mode` fibre by `M` (K × dₙ); that mode becomes K.
    pub fn mode_product(&self, matrix: &DMatrix<f64>, mode: usize) -> Result<DenseTensor> {
        self.check_mode(mode)?;
        let (left, dim, right) = split_dims(&self.shape, mode);
        if matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "mode {mode} has size {dim} but matrix has {} columns",
                matrix.ncols()
            )));
        }
        let k_dim = matrix.nrows();
        let mut shape = self.shape.clone();
        shape[mode] = k_dim;
        // Each mode-`mode` slab is a column-major left×dim block S; its image is S·Mᵀ.
        let mt = matrix.transpose();
        let mut data = vec![0.0; left * k_dim * right];
        for r in 0..right {
            let src = DMatrixView::from_slice(&self.data[left * dim * r..left * dim * (r + 1)], left, dim);
            let mut dst = DMatrixViewMut::from_slice(
                &mut data[left * k_dim * r..left * k_dim * (r + 1)],
                left,
                k_dim,
            );
            dst.gemm(1.0, &src, &mt, 0.0);
        }
        Ok(DenseTensor { shape, data })
    }
}

/// (product of modes before `mode`, size of `mode`, product of modes after `mode`).
fn split_dims(shape: &[usize], mode: usize) -> (usize, usize, usize) {
    let left = shape[..mode].iter().product();
    let right = shape[mode + 1..].iter().product();
    (left, shape[mode], right)
}

pub fn linear_index(shape: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), idx.len());
    let mut k = 0;
    let mut stride = 1;
    for (&i, &d) in idx.iter().zip(shape) {
        debug_assert!(i < d, "index {idx:?} out of bounds for {shape:?}");
        k += i * stride;
        stride *= d;
    }
    k
}

pub fn multi_index(shape: &[usize], mut linear: usize) -> Vec<usize> {
    shape
        .iter()
        .map(|&d| {
            let i = linear % d;
            linear /= d;
            i
        })
        .collect()
}

/// Steps a multi-index one position in storage order, wrapping to zero at the end.
pub(crate) fn advance(idx: &mut [usize], shape: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(shape) {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}
