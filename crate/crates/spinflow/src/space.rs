//! Labeled tensor-product space layouts.
//!
//! A [`SpaceLayout`] is an ordered list of labeled factors, e.g.
//! `[("I1", 2), ("S1", 3), ("Sp1", 2)]` for one dressed nucleus. Basis states
//! of each factor are ordered by descending magnetic quantum number
//! (`+1/2` before `-1/2`; `+1, 0, -1` for spin 1), and composite indices are
//! row-major over the factor list.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceLayout {
    factors: Vec<(String, usize)>,
    total_dim: usize,
}

impl SpaceLayout {
    pub fn new(factors: Vec<(String, usize)>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        let mut total: usize = 1;
        for (label, dim) in &factors {
            if *dim < 2 {
                return Err(Error::DimensionMismatch(format!(
                    "factor `{label}` has dimension {dim} < 2"
                )));
            }
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidModel(format!("duplicate factor label `{label}`")));
            }
            total = total.checked_mul(*dim).ok_or_else(|| {
                Error::DimensionMismatch("total dimension overflows usize".into())
            })?;
        }
        Ok(Self { factors, total_dim: total })
    }

    /// Convenience constructor from `(&str, usize)` pairs.
    pub fn from_pairs(pairs: &[(&str, usize)]) -> Result<Self> {
        Self::new(pairs.iter().map(|(l, d)| (l.to_string(), *d)).collect())
    }

    /// N nuclear spin-1/2 factors labeled `I1..IN`.
    pub fn nuclear_chain(n: usize) -> Self {
        let factors = (1..=n).map(|j| (format!("I{j}"), 2)).collect();
        Self::new(factors).expect("nuclear chain layout is always valid")
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        let k = self.index_of(label)?;
        Ok(self.factors[k].1)
    }

    /// Stride of factor `k`: the composite index increases by this much when
    /// the local index of factor `k` increases by one.
    pub fn stride(&self, k: usize) -> usize {
        self.factors[k + 1..].iter().map(|(_, d)| d).product()
    }

    /// Decompose a composite index into per-factor local indices.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for k in (0..self.factors.len()).rev() {
            let d = self.factors[k].1;
            out[k] = idx % d;
            idx /= d;
        }
        out
    }

    /// Compose per-factor local indices into a composite index.
    pub fn ravel(&self, locals: &[usize]) -> usize {
        assert_eq!(locals.len(), self.factors.len());
        let mut idx = 0;
        for (k, &i) in locals.iter().enumerate() {
            debug_assert!(i < self.factors[k].1);
            idx = idx * self.factors[k].1 + i;
        }
        idx
    }

    pub fn same_as(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::LayoutMismatch(format!(
                "{:?} vs {:?}",
                self.factors, other.factors
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_strides() {
        let l = SpaceLayout::from_pairs(&[("I1", 2), ("S", 3), ("Sp", 2), ("I2", 2)]).unwrap();
        assert_eq!(l.total_dim(), 24);
        assert_eq!(l.stride(0), 12);
        assert_eq!(l.stride(1), 4);
        assert_eq!(l.stride(3), 1);
        let idx = l.ravel(&[1, 2, 0, 1]);
        assert_eq!(l.unravel(idx), vec![1, 2, 0, 1]);
    }

    #[test]
    fn rejects_duplicates_and_trivial_factors() {
        assert!(SpaceLayout::from_pairs(&[("a", 2), ("a", 2)]).is_err());
        assert!(SpaceLayout::from_pairs(&[("a", 1)]).is_err());
    }
}
