//! DTF-1 tensor files.
//!
//! Little-endian layout: the magic `DTF1`, a `u32` order `N`, `N` `u64`
//! dimensions, then `Π dims` `f64` values in mode-0-fastest order. Matrices are
//! stored as order-2 tensors, which is their column-major layout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"DTF1";

pub fn write_tensor<W: Write>(mut w: W, t: &DenseTensor) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(t.order() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let order = u32::from_le_bytes(b4) as usize;
    if order == 0 {
        return Err(Error::Format("order must be at least 1".into()));
    }
    let mut shape = Vec::with_capacity(order);
    let mut b8 = [0u8; 8];
    for _ in 0..order {
        r.read_exact(&mut b8)?;
        let d = usize::try_from(u64::from_le_bytes(b8))
            .map_err(|_| Error::Format("dimension does not fit in memory".into()))?;
        shape.push(d);
    }
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("shape {shape:?} overflows")))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b8)
            .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
        data.push(f64::from_le_bytes(b8));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    DenseTensor::new(shape, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn matrix_to_tensor(m: &DMatrix<f64>) -> Result<DenseTensor> {
    DenseTensor::new(vec![m.nrows(), m.ncols()], m.as_slice().to_vec())
}

pub fn tensor_to_matrix(t: &DenseTensor) -> Result<DMatrix<f64>> {
    if t.order() != 2 {
        return Err(Error::Format(format!("expected an order-2 tensor, got order {}", t.order())));
    }
    Ok(DMatrix::from_column_slice(t.shape()[0], t.shape()[1], t.data()))
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    write_tensor(BufWriter::new(File::create(path)?), t)
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tensor(BufReader::new(File::open(path)?))
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    save_tensor(path, &matrix_to_tensor(m)?)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    tensor_to_matrix(&load_tensor(path)?)
}
