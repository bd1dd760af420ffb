//! Logarithmic transforms over computer-representable reals.
//!
//! `log_cr` extends the logarithm to negative, zero and positive doubles by
//! reflecting the negative branch and shifting both branches so zero is the
//! fixed point. `log_dataset_cr` adapts the shifts to one dataset so the
//! transform stays smooth across its values; the resulting log values spread
//! near-uniformly, which is what the two-level first stage exploits to carve
//! a wide-range dataset into limited-range subsets.

use thiserror::Error;

use crate::conditioning::DOUBLE_MIN;
use crate::dataset::DataSet;

/// Offset keeping the smallest positive image strictly above zero.
pub const EPSILON_SHIFT: f64 = 2e-16;

#[derive(Debug, Error, PartialEq)]
pub enum LogDomainError {
    #[error("input is not a finite number")]
    NonFiniteInput,
    #[error("bound falls outside the invertible domain")]
    OutOfDomain,
}

/// Log transform of any finite double: `0 -> 0`, positives to
/// `eps + ln x - ln DOUBLE_MIN`, negatives by antisymmetry.
pub fn log_cr(x: f64) -> Result<f64, LogDomainError> {
    if !x.is_finite() {
        return Err(LogDomainError::NonFiniteInput);
    }
    // The log difference is evaluated first: adding the tiny shift to a
    // hundreds-sized logarithm would round it away at the branch floor.
    if x == 0.0 {
        Ok(0.0)
    } else if x > 0.0 {
        Ok(EPSILON_SHIFT + (x.ln() - DOUBLE_MIN.ln()))
    } else {
        Ok(-(EPSILON_SHIFT + ((-x).ln() - DOUBLE_MIN.ln())))
    }
}

/// Shifts and reference magnitudes of a dataset-adapted log transform.
/// Each branch maps `x` to `shift + ln|x| - ln(ref)` (negated on the
/// negative branch), where `ref` is the branch's smallest magnitude and
/// `shift` its smallest positive log gap, so branch images stay clear of the
/// zero fixed point while consecutive values keep their log spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMapping {
    pub neg_shift: f64,
    pub pos_shift: f64,
    pub neg_ref: f64,
    pub pos_ref: f64,
    pub has_neg: bool,
    pub has_zero: bool,
    pub has_pos: bool,
}

impl LogMapping {
    /// Forward transform of a value under this mapping. The log difference
    /// is taken before the shift so the shift survives rounding at the
    /// branch reference.
    pub fn forward(&self, x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else if x > 0.0 {
            self.pos_shift + (x.ln() - self.pos_ref.ln())
        } else {
            -(self.neg_shift + ((-x).ln() - self.neg_ref.ln()))
        }
    }
}

/// Smallest positive gap between consecutive log magnitudes, or the default
/// shift when the branch has fewer than two distinct values.
fn branch_shift(log_values: &[f64]) -> f64 {
    let mut min_gap = f64::INFINITY;
    for w in log_values.windows(2) {
        let gap = (w[1] - w[0]).abs();
        if gap > 0.0 && gap < min_gap {
            min_gap = gap;
        }
    }
    if min_gap.is_finite() {
        min_gap
    } else {
        EPSILON_SHIFT
    }
}

/// Transforms a dataset into the adapted log domain. Frequencies and value
/// order are preserved; log values that collide at double precision coalesce.
pub fn log_dataset_cr(d: &DataSet) -> (DataSet, LogMapping) {
    let mut neg_logs: Vec<f64> = Vec::new();
    let mut pos_logs: Vec<f64> = Vec::new();
    let mut has_zero = false;
    let mut neg_ref = f64::INFINITY;
    let mut pos_ref = f64::INFINITY;
    for &(v, _) in d.entries() {
        if v == 0.0 {
            has_zero = true;
        } else if v > 0.0 {
            pos_ref = pos_ref.min(v);
            pos_logs.push(v.ln());
        } else {
            neg_ref = neg_ref.min(-v);
            neg_logs.push((-v).ln());
        }
    }
    let mapping = LogMapping {
        neg_shift: branch_shift(&neg_logs),
        pos_shift: branch_shift(&pos_logs),
        neg_ref: if neg_ref.is_finite() { neg_ref } else { DOUBLE_MIN },
        pos_ref: if pos_ref.is_finite() { pos_ref } else { DOUBLE_MIN },
        has_neg: !neg_logs.is_empty(),
        has_zero,
        has_pos: !pos_logs.is_empty(),
    };
    let pairs: Vec<(f64, u64)> = d
        .entries()
        .iter()
        .map(|&(v, f)| (mapping.forward(v), f))
        .collect();
    let transformed = DataSet::from_pairs(&pairs).expect("source dataset is non-empty");
    (transformed, mapping)
}

/// Closed-form inverse of the adapted transform, branch chosen by the sign
/// of `y`. Exact round trips are limited by the conditioning of `exp`, so
/// callers must treat the result as accurate in the log domain, not to the
/// last bit of the value domain.
pub fn invert_bound(y: f64, m: &LogMapping) -> Result<f64, LogDomainError> {
    if !y.is_finite() {
        return Err(LogDomainError::OutOfDomain);
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let x = if y > 0.0 {
        m.pos_ref * (y - m.pos_shift).exp()
    } else {
        -(m.neg_ref * (-y - m.neg_shift).exp())
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(LogDomainError::OutOfDomain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ulps_apart(a: f64, b: f64) -> u64 {
        if a == b {
            return 0;
        }
        assert!(a.is_finite() && b.is_finite() && a.signum() == b.signum());
        (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
    }

    #[test]
    fn zero_is_fixed_point() {
        assert_eq!(log_cr(0.0).unwrap(), 0.0);
        assert_eq!(log_cr(f64::NAN), Err(LogDomainError::NonFiniteInput));
    }

    #[test]
    fn antisymmetric() {
        for &x in &[1.0e-300, 1.0e-5, 1.0, 3.7, 1.0e12, 1.0e300] {
            assert_eq!(log_cr(-x).unwrap(), -log_cr(x).unwrap());
        }
    }

    #[test]
    fn supremum_spans_six_hundred_decades() {
        // The largest image is about 600 * ln(10); the exact value lands a
        // couple of percent above because the top magnitude overshoots 1e308.
        let sup = log_cr(f64::MAX).unwrap();
        let reference = 600.0 * 10.0f64.ln();
        assert!((sup / reference - 1.0).abs() < 0.03, "sup = {sup}");
        assert!(log_cr(DOUBLE_MIN).unwrap() > 0.0);
    }

    #[test]
    fn adapted_transform_of_unit_log_spaced_values() {
        let e = std::f64::consts::E;
        let d = DataSet::from_values(&[1.0, e, e * e]).unwrap();
        let (t, m) = log_dataset_cr(&d);
        assert!(m.has_pos && !m.has_neg && !m.has_zero);
        // Minimal log gap is exactly 1, so images are shift, shift+1, shift+2.
        let got: Vec<f64> = t.entries().iter().map(|&(v, _)| v).collect();
        assert!((m.pos_shift - 1.0).abs() < 1e-12);
        for (i, v) in got.iter().enumerate() {
            assert!((v - (m.pos_shift + i as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_only_dataset() {
        let d = DataSet::from_values(&[0.0, 0.0]).unwrap();
        let (t, m) = log_dataset_cr(&d);
        assert_eq!(t.entries(), &[(0.0, 2)]);
        assert!(m.has_zero && !m.has_pos && !m.has_neg);
        assert_eq!(invert_bound(0.0, &m).unwrap(), 0.0);
    }

    #[test]
    fn round_trip_stays_close_in_value_domain() {
        let values = [
            -3.0e8, -271.25, -1.0e-3, 0.0, 2.0e-7, 0.125, 1.0, 97.5, 4.2e9,
        ];
        let d = DataSet::from_values(&values).unwrap();
        let (_, m) = log_dataset_cr(&d);
        for &v in &values {
            let back = invert_bound(m.forward(v), &m).unwrap();
            if v == 0.0 {
                assert_eq!(back, 0.0);
            } else {
                assert!(
                    ulps_apart(back, v) <= 64,
                    "{v} -> {back} ({} ulps)",
                    ulps_apart(back, v)
                );
            }
        }
    }

    #[test]
    fn round_trip_exact_in_log_domain() {
        let d = DataSet::from_values(&[-40.0, -1.5, 0.25, 3.0, 1200.0]).unwrap();
        let (t, m) = log_dataset_cr(&d);
        for &(y, _) in t.entries() {
            let x = invert_bound(y, &m).unwrap();
            let y2 = m.forward(x);
            let scale = y.abs().max(1e-12);
            assert!((y2 - y).abs() <= 1e-12 * scale, "{y} -> {x} -> {y2}");
        }
    }

    #[test]
    fn mid_gap_bound_inverts_between_neighbors() {
        let d = DataSet::from_values(&[0.5, 2.0, 11.0, 300.0]).unwrap();
        let (t, m) = log_dataset_cr(&d);
        let logs: Vec<f64> = t.entries().iter().map(|&(v, _)| v).collect();
        let values: Vec<f64> = d.entries().iter().map(|&(v, _)| v).collect();
        for i in 0..logs.len() - 1 {
            let mid = (logs[i] + logs[i + 1]) / 2.0;
            let x = invert_bound(mid, &m).unwrap();
            assert!(values[i] < x && x < values[i + 1], "{x} not inside gap {i}");
        }
    }

    #[test]
    fn positive_differences_match_log_differences() {
        let d = DataSet::from_values(&[0.3, 1.7, 42.0, 9000.0]).unwrap();
        let (t, m) = log_dataset_cr(&d);
        assert!(m.has_pos);
        let vals = d.entries();
        let logs = t.entries();
        for i in 0..vals.len() - 1 {
            let expect = vals[i + 1].0.ln() - vals[i].0.ln();
            let got = logs[i + 1].0 - logs[i].0;
            assert!((got - expect).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn forward_is_strictly_increasing(
            mut values in proptest::collection::vec(-1.0e9..1.0e9f64, 2..60),
            with_zero in proptest::bool::ANY,
        ) {
            if with_zero {
                values.push(0.0);
            }
            let d = DataSet::from_values(&values).unwrap();
            let (t, m) = log_dataset_cr(&d);
            prop_assert_eq!(t.n(), d.n());
            let mapped: Vec<f64> = d.entries().iter().map(|&(v, _)| m.forward(v)).collect();
            for w in mapped.windows(2) {
                prop_assert!(w[0] < w[1], "order broken: {} !< {}", w[0], w[1]);
            }
        }
    }
}
