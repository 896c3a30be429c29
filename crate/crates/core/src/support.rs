//! Index sets over a fixed tensor grid.

use crate::error::{Error, Result};
use crate::tensor::{linear_index, multi_index};

/// A set of in-bounds multi-indices over `shape`, stored as a membership mask.
/// Iteration is in storage (mode-0-fastest) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    shape: Vec<usize>,
    mask: Vec<bool>,
    count: usize,
}

impl SupportSet {
    pub fn empty(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            mask: vec![false; len],
            count: 0,
        }
    }

    pub fn full(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            mask: vec![true; len],
            count: len,
        }
    }

    pub fn from_linear(shape: &[usize], indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(shape);
        for k in indices {
            if k >= s.mask.len() {
                return Err(Error::InvalidShape(format!(
                    "linear index {k} out of bounds for {shape:?}"
                )));
            }
            s.insert(k);
        }
        Ok(s)
    }

    pub fn from_tuples<'a>(
        shape: &[usize],
        tuples: impl IntoIterator<Item = &'a [usize]>,
    ) -> Result<Self> {
        let mut s = Self::empty(shape);
        for t in tuples {
            if t.len() != shape.len() || t.iter().zip(shape).any(|(&i, &d)| i >= d) {
                return Err(Error::InvalidShape(format!(
                    "index {t:?} out of bounds for {shape:?}"
                )));
            }
            s.insert(linear_index(shape, t));
        }
        Ok(s)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn contains(&self, linear: usize) -> bool {
        self.mask[linear]
    }

    pub fn contains_tuple(&self, idx: &[usize]) -> bool {
        self.mask[linear_index(&self.shape, idx)]
    }

    /// Returns `true` when the index was not already present.
    pub fn insert(&mut self, linear: usize) -> bool {
        let was = std::mem::replace(&mut self.mask[linear], true);
        if !was {
            self.count += 1;
        }
        !was
    }

    /// Returns `true` when the index was present.
    pub fn remove(&mut self, linear: usize) -> bool {
        let was = std::mem::replace(&mut self.mask[linear], false);
        if was {
            self.count -= 1;
        }
        was
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(k, &m)| m.then_some(k))
    }

    pub fn tuples(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        self.iter().map(|k| multi_index(&self.shape, k))
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    fn check_grid(&self, other: &SupportSet) {
        assert_eq!(self.shape, other.shape, "support sets live on different grids");
    }

    pub fn union_with(&mut self, other: &SupportSet) {
        self.check_grid(other);
        for (k, &m) in other.mask.iter().enumerate() {
            if m {
                self.insert(k);
            }
        }
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        self.check_grid(other);
        self.mask
            .iter()
            .zip(&other.mask)
            .filter(|(&a, &b)| a && b)
            .count()
    }

    /// `self \ other`.
    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        self.check_grid(other);
        let mut out = self.clone();
        for k in other.iter() {
            out.remove(k);
        }
        out
    }

    pub fn is_subset(&self, other: &SupportSet) -> bool {
        self.check_grid(other);
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}
