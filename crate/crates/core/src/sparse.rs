use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SparseError {
    #[error("feature indices must be strictly increasing (index {0} follows {1})")]
    Unsorted(usize, usize),
    #[error("feature index {index} out of range for dimension {dimension}")]
    OutOfRange { index: usize, dimension: usize },
}

/// A sparse real vector with strictly increasing indices and no stored
/// zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
    dimension: usize,
}

impl SparseVector {
    pub fn zeros(dimension: usize) -> Self {
        SparseVector {
            entries: Vec::new(),
            dimension,
        }
    }

    /// Builds a vector from `(index, value)` pairs that are already sorted.
    /// Zero values are dropped.
    pub fn new(dimension: usize, entries: Vec<(usize, f64)>) -> Result<Self, SparseError> {
        let mut prev: Option<usize> = None;
        for &(index, _) in &entries {
            if index >= dimension {
                return Err(SparseError::OutOfRange { index, dimension });
            }
            if let Some(p) = prev {
                if index <= p {
                    return Err(SparseError::Unsorted(index, p));
                }
            }
            prev = Some(index);
        }
        let entries = entries.into_iter().filter(|&(_, v)| v != 0.0).collect();
        Ok(SparseVector { entries, dimension })
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            entries: values
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
            dimension: values.len(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |pos| self.entries[pos].1)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dimension];
        for &(i, v) in &self.entries {
            dense[i] = v;
        }
        dense
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Dot product with a dense vector at least as long as this one's
    /// dimension.
    #[inline]
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    /// `dense += scale * self`
    #[inline]
    pub fn axpy_into(&self, scale: f64, dense: &mut [f64]) {
        for &(i, v) in &self.entries {
            dense[i] += scale * v;
        }
    }

    /// Scales to unit L2 norm; the zero vector is returned unchanged.
    pub fn l2_normalized(mut self) -> Self {
        let norm = self.norm();
        if norm > 0.0 {
            for entry in &mut self.entries {
                entry.1 /= norm;
            }
        }
        self
    }

    pub fn has_non_finite(&self) -> bool {
        self.entries.iter().any(|&(_, v)| !v.is_finite())
    }

    /// Appends `block` after this vector, shifting its indices by the current
    /// dimension.
    pub fn concat(mut self, block: &SparseVector) -> Self {
        let offset = self.dimension;
        self.entries
            .extend(block.entries.iter().map(|&(i, v)| (i + offset, v)));
        self.dimension += block.dimension;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(SparseVector::new(3, vec![(0, 1.0), (2, 1.0)]).is_ok());
        assert_eq!(
            SparseVector::new(3, vec![(2, 1.0), (1, 1.0)]),
            Err(SparseError::Unsorted(1, 2))
        );
        assert_eq!(
            SparseVector::new(2, vec![(2, 1.0)]),
            Err(SparseError::OutOfRange {
                index: 2,
                dimension: 2
            })
        );
        let v = SparseVector::new(3, vec![(0, 0.0), (1, 2.0)]).unwrap();
        assert_eq!(v.nnz(), 1);
    }

    #[test]
    fn dense_ops() {
        let v = SparseVector::from_dense(&[3.0, 0.0, 4.0]);
        assert_eq!(v.dot_dense(&[1.0, 5.0, 1.0]), 7.0);
        assert_eq!(v.norm(), 5.0);
        let unit = v.clone().l2_normalized();
        assert_eq!(unit.to_dense(), vec![0.6, 0.0, 0.8]);
        let mut acc = vec![0.0; 3];
        v.axpy_into(2.0, &mut acc);
        assert_eq!(acc, vec![6.0, 0.0, 8.0]);
        assert_eq!(v.get(2), 4.0);
        assert_eq!(v.get(1), 0.0);
    }

    #[test]
    fn concat_shifts_indices() {
        let a = SparseVector::from_dense(&[1.0, 0.0]);
        let b = SparseVector::from_dense(&[0.0, 2.0]);
        let c = a.concat(&b);
        assert_eq!(c.dimension(), 4);
        assert_eq!(c.entries(), &[(0, 1.0), (3, 2.0)]);
    }
}
