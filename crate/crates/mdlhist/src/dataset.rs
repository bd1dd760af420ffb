//! Canonical sorted value/frequency representation of a numeric sample.

use serde::Serialize;
use thiserror::Error;

/// Errors raised while constructing or slicing a [`DataSet`].
#[derive(Debug, Error, PartialEq)]
pub enum DataSetError {
    #[error("input contains no values")]
    EmptyInput,
    #[error("non-finite value at index {index}")]
    NonFiniteValue { index: usize },
    #[error("frequency must be positive at index {index}")]
    ZeroFrequency { index: usize },
    #[error("range [{lo}, {hi}] selects no entries")]
    EmptyRange { lo: f64, hi: f64 },
    #[error("invalid range: lo must be smaller than hi")]
    InvalidRange,
}

/// A numeric sample stored as strictly increasing values with positive
/// frequencies. Duplicates are coalesced at construction, so "distinct value"
/// questions are structural rather than recomputed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSet {
    entries: Vec<(f64, u64)>,
    n: u64,
}

impl DataSet {
    /// Builds a canonical dataset from raw values, coalescing duplicates.
    /// The result is independent of the input order.
    pub fn from_values(values: &[f64]) -> Result<Self, DataSetError> {
        if values.is_empty() {
            return Err(DataSetError::EmptyInput);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataSetError::NonFiniteValue { index });
        }
        let mut sorted: Vec<f64> = values
            .iter()
            .map(|&v| if v == 0.0 { 0.0 } else { v }) // normalize -0.0
            .collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
        let mut entries: Vec<(f64, u64)> = Vec::new();
        for v in sorted {
            match entries.last_mut() {
                Some((last, freq)) if *last == v => *freq += 1,
                _ => entries.push((v, 1)),
            }
        }
        let n = values.len() as u64;
        Ok(DataSet { entries, n })
    }

    /// Builds a canonical dataset from (value, frequency) pairs.
    pub fn from_pairs(pairs: &[(f64, u64)]) -> Result<Self, DataSetError> {
        if pairs.is_empty() {
            return Err(DataSetError::EmptyInput);
        }
        for (index, &(v, f)) in pairs.iter().enumerate() {
            if !v.is_finite() {
                return Err(DataSetError::NonFiniteValue { index });
            }
            if f == 0 {
                return Err(DataSetError::ZeroFrequency { index });
            }
        }
        let mut sorted: Vec<(f64, u64)> = pairs
            .iter()
            .map(|&(v, f)| (if v == 0.0 { 0.0 } else { v }, f))
            .collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("values are finite"));
        let mut entries: Vec<(f64, u64)> = Vec::new();
        let mut n: u64 = 0;
        for (v, f) in sorted {
            n += f;
            match entries.last_mut() {
                Some((last, freq)) if *last == v => *freq += f,
                _ => entries.push((v, f)),
            }
        }
        Ok(DataSet { entries, n })
    }

    /// Sorted (value, frequency) entries.
    pub fn entries(&self) -> &[(f64, u64)] {
        &self.entries
    }

    /// Total number of data entries (sum of frequencies).
    pub fn n(&self) -> u64 {
        self.n
    }

    /// Number of distinct values.
    pub fn distinct_count(&self) -> usize {
        self.entries.len()
    }

    pub fn min_value(&self) -> f64 {
        self.entries[0].0
    }

    pub fn max_value(&self) -> f64 {
        self.entries[self.entries.len() - 1].0
    }

    pub fn range(&self) -> f64 {
        self.max_value() - self.min_value()
    }

    /// Replicates each value `frequency` times, recovering the raw sample.
    pub fn expand(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n as usize);
        for &(v, f) in &self.entries {
            for _ in 0..f {
                out.push(v);
            }
        }
        out
    }

    /// Contiguous sub-dataset of entries in the range. The upper bound is
    /// always inclusive; `lo_inclusive` selects `[lo, hi]` versus `(lo, hi]`.
    pub fn slice(&self, lo: f64, hi: f64, lo_inclusive: bool) -> Result<Self, DataSetError> {
        if !(lo < hi) {
            return Err(DataSetError::InvalidRange);
        }
        let start = self
            .entries
            .partition_point(|&(v, _)| if lo_inclusive { v < lo } else { v <= lo });
        let end = self.entries.partition_point(|&(v, _)| v <= hi);
        if start >= end {
            return Err(DataSetError::EmptyRange { lo, hi });
        }
        Ok(Self::from_entry_range(self, start, end))
    }

    /// Sub-dataset over an entry index range (end exclusive).
    pub(crate) fn from_entry_range(d: &DataSet, start: usize, end: usize) -> Self {
        let entries: Vec<(f64, u64)> = d.entries[start..end].to_vec();
        let n = entries.iter().map(|&(_, f)| f).sum();
        DataSet { entries, n }
    }

    /// Concatenates two datasets whose value ranges are disjoint and ordered.
    pub(crate) fn concat(left: &DataSet, right: &DataSet) -> Self {
        debug_assert!(left.max_value() < right.min_value());
        let mut entries = left.entries.clone();
        entries.extend_from_slice(&right.entries);
        DataSet {
            entries,
            n: left.n + right.n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coalesces_duplicates() {
        let d = DataSet::from_values(&[3.0, 1.0, 1.0]).unwrap();
        assert_eq!(d.entries(), &[(1.0, 2), (3.0, 1)]);
        assert_eq!(d.n(), 3);
    }

    #[test]
    fn singleton() {
        let d = DataSet::from_values(&[5.0]).unwrap();
        assert_eq!(d.entries(), &[(5.0, 1)]);
        assert_eq!(d.n(), 1);
        assert_eq!(d.min_value(), 5.0);
        assert_eq!(d.max_value(), 5.0);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert_eq!(DataSet::from_values(&[]), Err(DataSetError::EmptyInput));
        assert_eq!(
            DataSet::from_values(&[1.0, f64::NAN]),
            Err(DataSetError::NonFiniteValue { index: 1 })
        );
        assert_eq!(
            DataSet::from_values(&[f64::INFINITY]),
            Err(DataSetError::NonFiniteValue { index: 0 })
        );
        assert_eq!(
            DataSet::from_pairs(&[(1.0, 0)]),
            Err(DataSetError::ZeroFrequency { index: 0 })
        );
    }

    #[test]
    fn slice_respects_bounds() {
        let d = DataSet::from_values(&[1.0, 2.0, 3.0]).unwrap();
        let s = d.slice(1.5, 3.0, false).unwrap();
        assert_eq!(s.entries(), &[(2.0, 1), (3.0, 1)]);

        let full = d.slice(d.min_value(), d.max_value(), true).unwrap();
        assert_eq!(full, d);

        let two = DataSet::from_values(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            two.slice(5.0, 6.0, true),
            Err(DataSetError::EmptyRange { .. })
        ));
    }

    #[test]
    fn lo_exclusive_drops_boundary_value() {
        let d = DataSet::from_values(&[1.0, 2.0, 3.0]).unwrap();
        let s = d.slice(1.0, 3.0, false).unwrap();
        assert_eq!(s.entries(), &[(2.0, 1), (3.0, 1)]);
    }

    #[test]
    fn negative_zero_normalized() {
        let a = DataSet::from_values(&[-0.0, 1.0]).unwrap();
        let b = DataSet::from_values(&[0.0, 1.0]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.min_value().to_bits(), 0.0f64.to_bits());
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut values in proptest::collection::vec(-1.0e6..1.0e6f64, 1..50)) {
            let d1 = DataSet::from_values(&values).unwrap();
            values.reverse();
            let rot = values.len() / 3;
            values.rotate_left(rot);
            let d2 = DataSet::from_values(&values).unwrap();
            prop_assert_eq!(d1, d2);
        }

        #[test]
        fn expand_round_trips(values in proptest::collection::vec(-1.0e6..1.0e6f64, 1..50)) {
            let d = DataSet::from_values(&values).unwrap();
            let again = DataSet::from_values(&d.expand()).unwrap();
            prop_assert_eq!(d, again);
        }

        #[test]
        fn disjoint_slices_conserve_n(values in proptest::collection::vec(-100.0..100.0f64, 2..60), cut in -100.0..100.0f64) {
            let d = DataSet::from_values(&values).unwrap();
            let lo = d.min_value();
            let hi = d.max_value();
            prop_assume!(lo < cut && cut < hi);
            let left = d.slice(lo, cut, true);
            let right = d.slice(cut, hi, false);
            let total = left.map(|s| s.n()).unwrap_or(0) + right.map(|s| s.n()).unwrap_or(0);
            prop_assert_eq!(total, d.n());
        }
    }
}
