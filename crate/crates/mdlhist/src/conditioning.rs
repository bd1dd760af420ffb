//! Diagnoses how well a dataset is conditioned for histogram construction.
//!
//! Collisions (distinct values sharing a bin) measure whether interval
//! bounds can separate the data at a given elementary-bin budget. The
//! verdicts escalate from ICH (any collision at E bins) through RICH (more
//! collisions than ln n) to PICH (one bin of a sqrt(E)*ln(E) granularization
//! holds more than ln n entries), the trigger of the two-level pipeline.

use serde::Serialize;
use thiserror::Error;

use crate::dataset::DataSet;

/// Default elementary bin budget.
pub const DEFAULT_E_MAX: u64 = 1_000_000_000;

/// Smallest positive normalized magnitude treated as representable.
pub const DOUBLE_MIN: f64 = 1e-308;

/// Largest magnitude treated as representable.
pub const DOUBLE_MAX: f64 = 1e308;

/// Target number of distinct representable values per elementary bin.
pub const DISTINCT_PER_BIN: f64 = 100.0;

/// Positive representable values assumed between `DOUBLE_MIN` and
/// `DOUBLE_MAX` (half of the 64-bit patterns).
const TOTAL_POSITIVE: f64 = 9.223372036854775808e18; // 2^63

#[derive(Debug, Error, PartialEq)]
pub enum ConditioningError {
    #[error("invalid range: need finite lo < hi")]
    InvalidRange,
}

/// Conditioning diagnostics of one dataset.
///
/// `collision_count` counts entries in colliding bins at `effective_e` bins;
/// `max_colliding_bin_count` is taken at the coarser `t_e` granularization
/// that defines the PICH verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditioningReport {
    pub rng: f64,
    pub pr: Option<f64>,
    pub gr: Option<f64>,
    pub collision_count: u64,
    pub max_colliding_bin_count: u64,
    pub verdict_ich: bool,
    pub verdict_rich: bool,
    pub verdict_pich: bool,
    pub t_c: f64,
    pub t_e: u64,
    pub effective_e: u64,
    pub at_mantissa_limit: bool,
}

/// Range, precision (minimal gap between successive distinct values) and
/// granular length range/precision. Precision is undefined for a single
/// distinct value.
pub fn range_precision_granular(d: &DataSet) -> (f64, Option<f64>, Option<f64>) {
    let rng = d.range();
    if d.distinct_count() < 2 {
        return (rng, None, None);
    }
    let mut pr = f64::INFINITY;
    for pair in d.entries().windows(2) {
        let gap = pair[1].0 - pair[0].0;
        if gap > 0.0 && gap < pr {
            pr = gap;
        }
    }
    (rng, Some(pr), Some(rng / pr))
}

/// Collision statistics over `bins` equal-width bins spanning
/// `[min - eps/2, max + eps/2]` with `eps = range / domain_e`.
/// Returns (entries in colliding bins, largest colliding bin total), where a
/// bin collides when it holds two or more distinct values.
pub(crate) fn collision_stats(d: &DataSet, bins: u64, domain_e: u64) -> (u64, u64) {
    if d.distinct_count() < 2 || bins == 0 {
        return (0, 0);
    }
    let rng = d.range();
    let eps = rng / domain_e as f64;
    let lower = d.min_value() - eps / 2.0;
    let span = d.max_value() + eps / 2.0 - lower;
    let mut total = 0u64;
    let mut max_bin = 0u64;
    let mut cur_bin = u64::MAX;
    let mut cur_count = 0u64;
    let mut cur_distinct = 0u64;
    let flush = |count: u64, distinct: u64, total: &mut u64, max_bin: &mut u64| {
        if distinct >= 2 {
            *total += count;
            if count > *max_bin {
                *max_bin = count;
            }
        }
    };
    for &(v, f) in d.entries() {
        let idx = ((bins as f64 * ((v - lower) / span)) as u64).min(bins - 1);
        if idx != cur_bin {
            flush(cur_count, cur_distinct, &mut total, &mut max_bin);
            cur_bin = idx;
            cur_count = 0;
            cur_distinct = 0;
        }
        cur_count += f;
        cur_distinct += 1;
    }
    flush(cur_count, cur_distinct, &mut total, &mut max_bin);
    (total, max_bin)
}

/// Collision statistics at `bins` bins, with the domain extension taken from
/// the dataset's effective elementary-bin budget.
pub fn collision_count(d: &DataSet, bins: u64) -> (u64, u64) {
    let (eff, _) = effective_epsilon_bins(d, DEFAULT_E_MAX);
    collision_stats(d, bins, eff)
}

/// Ill conditioned: at least one collision at `e` elementary bins
/// (equivalently, the granular length exceeds `e`).
pub fn is_ich(d: &DataSet, e: u64) -> bool {
    collision_stats(d, e, e).0 >= 1
}

/// Robustly ill conditioned: more colliding entries than ln n.
pub fn is_rich(d: &DataSet, e: u64) -> bool {
    collision_stats(d, e, e).0 as f64 > (d.n() as f64).ln()
}

/// Collision-test granularity `round(sqrt(E) * ln E)`.
pub fn t_e_threshold(e: u64) -> u64 {
    let e = e as f64;
    ((e.sqrt() * e.ln()).round() as u64).max(1)
}

/// Colliding-bin entry threshold `ln n`.
pub fn t_c_threshold(n: u64) -> f64 {
    (n as f64).ln()
}

/// Practically ill conditioned: some colliding bin of the `t_e`
/// granularization holds more than `ln n` entries. Datasets at the mantissa
/// budget limit are treated as well conditioned, since splitting cannot
/// improve their separability.
pub fn is_pich(d: &DataSet, e_max: u64) -> bool {
    let (eff, at_limit) = effective_epsilon_bins(d, e_max);
    if at_limit {
        return false;
    }
    let bins = t_e_threshold(eff);
    let (_, max_bin) = collision_stats(d, bins, eff);
    max_bin as f64 > t_c_threshold(d.n())
}

fn one_sided_estimate(lo_mag: f64, hi_mag: f64) -> f64 {
    let lo = lo_mag.max(DOUBLE_MIN);
    let hi = hi_mag.max(DOUBLE_MIN);
    let log_span = DOUBLE_MAX.ln() - DOUBLE_MIN.ln();
    (TOTAL_POSITIVE * (hi.ln() - lo.ln()) / log_span).max(0.0)
}

/// Rough count of distinct representable doubles in `[lo, hi]`, assuming the
/// log transform spreads them uniformly: per sign, 2^63 values span the
/// magnitudes from `DOUBLE_MIN` to `DOUBLE_MAX`. Mixed-sign ranges sum the
/// two one-sided estimates.
pub fn estimate_distinct_representables(lo: f64, hi: f64) -> Result<f64, ConditioningError> {
    if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
        return Err(ConditioningError::InvalidRange);
    }
    let n_d = if lo >= 0.0 {
        one_sided_estimate(lo, hi)
    } else if hi <= 0.0 {
        one_sided_estimate(-hi, -lo)
    } else {
        one_sided_estimate(DOUBLE_MIN, -lo) + one_sided_estimate(DOUBLE_MIN, hi)
    };
    Ok(n_d)
}

/// Elementary bin budget after the mantissa rule: keep `e_max` when the data
/// range holds at least `DISTINCT_PER_BIN` representable values per bin, else
/// shrink the budget (and flag the dataset as at the mantissa limit).
pub fn effective_epsilon_bins(d: &DataSet, e_max: u64) -> (u64, bool) {
    if d.range() == 0.0 {
        return (1, true);
    }
    let n_d = estimate_distinct_representables(d.min_value(), d.max_value())
        .expect("dataset range is finite and non-degenerate");
    if n_d / e_max as f64 >= DISTINCT_PER_BIN {
        (e_max, false)
    } else {
        (((n_d / DISTINCT_PER_BIN).ceil() as u64).max(1), true)
    }
}

/// Full conditioning report at budget `e_max`.
pub fn analyze(d: &DataSet, e_max: u64) -> ConditioningReport {
    let (rng, pr, gr) = range_precision_granular(d);
    let (effective_e, at_mantissa_limit) = effective_epsilon_bins(d, e_max);
    let (collisions, _) = collision_stats(d, effective_e, effective_e);
    let t_e = t_e_threshold(effective_e);
    let t_c = t_c_threshold(d.n());
    let (_, max_colliding) = collision_stats(d, t_e, effective_e);
    ConditioningReport {
        rng,
        pr,
        gr,
        collision_count: collisions,
        max_colliding_bin_count: max_colliding,
        verdict_ich: collisions >= 1,
        verdict_rich: collisions as f64 > t_c,
        verdict_pich: !at_mantissa_limit && max_colliding as f64 > t_c,
        t_c,
        t_e,
        effective_e,
        at_mantissa_limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_values(n: usize, seed: u64) -> Vec<f64> {
        let mut state = seed | 1;
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            })
            .collect()
    }

    #[test]
    fn range_precision_examples() {
        let d = DataSet::from_values(&[0.0, 1.0]).unwrap();
        assert_eq!(range_precision_granular(&d), (1.0, Some(1.0), Some(1.0)));

        let d = DataSet::from_values(&[0.0, 0.5, 2.0]).unwrap();
        assert_eq!(range_precision_granular(&d), (2.0, Some(0.5), Some(4.0)));

        let d = DataSet::from_values(&[3.0, 3.0]).unwrap();
        assert_eq!(range_precision_granular(&d), (0.0, None, None));
    }

    #[test]
    fn collision_examples() {
        let d = DataSet::from_values(&[1.0, 2.0]).unwrap();
        assert_eq!(collision_count(&d, 2), (0, 0));

        let d = DataSet::from_values(&[1.0, 1.0000001, 100.0]).unwrap();
        assert_eq!(collision_count(&d, 10), (2, 2));

        let d = DataSet::from_values(&[7.0; 5]).unwrap();
        assert_eq!(collision_count(&d, 3), (0, 0));
        assert_eq!(collision_count(&d, 1000), (0, 0));
    }

    #[test]
    fn ich_detects_precision_below_epsilon() {
        let d = DataSet::from_values(&[0.0, 1e-12, 1.0]).unwrap();
        assert!(is_ich(&d, DEFAULT_E_MAX));
    }

    #[test]
    fn uniform_thousand_is_well_conditioned() {
        let d = DataSet::from_values(&uniform_values(1000, 0x1234)).unwrap();
        assert!(!is_ich(&d, DEFAULT_E_MAX));
        assert!(!is_pich(&d, DEFAULT_E_MAX));
    }

    #[test]
    fn outlier_collapse_is_pich() {
        // A tight cluster plus one value 2^34 away: the whole cluster lands
        // in one bin of the t_e granularization.
        let mut values: Vec<f64> = (0..10_000).map(|i| 1.0 + i as f64 * 1e-8).collect();
        values.push((2u64 << 33) as f64);
        let d = DataSet::from_values(&values).unwrap();
        assert!(is_pich(&d, DEFAULT_E_MAX));
        assert!(is_ich(&d, DEFAULT_E_MAX));
        let report = analyze(&d, DEFAULT_E_MAX);
        assert!(report.verdict_pich && report.verdict_rich && report.verdict_ich);
        assert!(report.max_colliding_bin_count >= 10_000);
    }

    #[test]
    fn all_equal_never_pich() {
        let d = DataSet::from_values(&[5.0; 40]).unwrap();
        assert!(!is_pich(&d, DEFAULT_E_MAX));
        let r = analyze(&d, DEFAULT_E_MAX);
        assert!(!r.verdict_ich && !r.verdict_rich && !r.verdict_pich);
        assert!(r.at_mantissa_limit);
        assert_eq!(r.effective_e, 1);
    }

    #[test]
    fn t_e_threshold_magnitude() {
        // sqrt(1e9) * ln(1e9) is about 655,000.
        let t = t_e_threshold(DEFAULT_E_MAX);
        assert!((t as f64 - 655_000.0).abs() < 1_000.0, "t_e = {t}");
    }

    #[test]
    fn representable_estimate_unit_log_interval() {
        let got = estimate_distinct_representables(1.0, std::f64::consts::E).unwrap();
        let expected = TOTAL_POSITIVE / (616.0 * 10.0f64.ln());
        assert!((got / expected - 1.0).abs() < 1e-9);
        // Cross-check the order of magnitude against the true count of
        // representable doubles in [1, e], via bit-pattern distance.
        let true_count = (std::f64::consts::E.to_bits() - 1.0f64.to_bits()) as f64;
        assert!(got / true_count > 0.5 && got / true_count < 2.0);
    }

    #[test]
    fn representable_estimate_symmetry_and_errors() {
        let hi = 3.5e4;
        let sym = estimate_distinct_representables(-hi, hi).unwrap();
        let one = estimate_distinct_representables(DOUBLE_MIN, hi).unwrap();
        assert!((sym / (2.0 * one) - 1.0).abs() < 1e-12);
        assert_eq!(
            estimate_distinct_representables(2.0, 2.0),
            Err(ConditioningError::InvalidRange)
        );
        assert_eq!(
            estimate_distinct_representables(f64::NEG_INFINITY, 1.0),
            Err(ConditioningError::InvalidRange)
        );
    }

    #[test]
    fn effective_bins_examples() {
        let d = DataSet::from_values(&[1.0, 2.0]).unwrap();
        assert_eq!(effective_epsilon_bins(&d, DEFAULT_E_MAX), (DEFAULT_E_MAX, false));

        let d = DataSet::from_values(&[1.0e9, 1.0e9 + 1.0]).unwrap();
        let (e, limited) = effective_epsilon_bins(&d, DEFAULT_E_MAX);
        assert!(limited);
        let n_d = estimate_distinct_representables(1.0e9, 1.0e9 + 1.0).unwrap();
        assert_eq!(e, (n_d / DISTINCT_PER_BIN).ceil() as u64);
        assert!(e > 10_000 && e < 100_000_000, "e = {e}");

        let d = DataSet::from_values(&[9.0]).unwrap();
        assert_eq!(effective_epsilon_bins(&d, DEFAULT_E_MAX), (1, true));
    }

    #[test]
    fn separated_integers_never_collide_at_fine_bins() {
        let values: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let d = DataSet::from_values(&values).unwrap();
        let bins = (d.distinct_count() * d.distinct_count() * 2) as u64;
        assert_eq!(collision_count(&d, bins), (0, 0));
    }

    proptest! {
        #[test]
        fn rich_implies_ich(values in proptest::collection::vec(-1.0e3..1.0e3f64, 2..200), e in 2u64..10_000) {
            let d = DataSet::from_values(&values).unwrap();
            if is_rich(&d, e) {
                prop_assert!(is_ich(&d, e));
            }
        }

        #[test]
        fn representable_estimate_monotone_in_hi(lo in -1.0e6..1.0e6f64, a in 1.0e-3..1.0e3f64, b in 1.0e-3..1.0e3f64) {
            let hi1 = lo + a;
            let hi2 = lo + a + b;
            let n1 = estimate_distinct_representables(lo, hi1).unwrap();
            let n2 = estimate_distinct_representables(lo, hi2).unwrap();
            prop_assert!(n2 >= n1);
            prop_assert!(n1.is_finite() && n1 >= 0.0);
        }

        #[test]
        fn representable_estimate_additive(a in 1.0e-3..1.0e2f64, step1 in 0.1..10.0f64, step2 in 0.1..10.0f64) {
            let b = a + step1;
            let c = b + step2;
            let ab = estimate_distinct_representables(a, b).unwrap();
            let bc = estimate_distinct_representables(b, c).unwrap();
            let ac = estimate_distinct_representables(a, c).unwrap();
            prop_assert!((ab + bc - ac).abs() <= 1e-9 * ac.max(1.0));
        }
    }

    #[test]
    fn pich_implies_ich_on_collapsed_data() {
        // Continuous clusters dense enough to trigger the PICH bin threshold
        // also collide at the fine elementary grid.
        for seed in 1..6u64 {
            let mut values = uniform_values(5000, seed);
            for v in values.iter_mut() {
                *v *= 1e-6; // squeeze into a narrow cluster
            }
            values.push(1e6);
            let d = DataSet::from_values(&values).unwrap();
            if is_pich(&d, DEFAULT_E_MAX) {
                assert!(is_ich(&d, DEFAULT_E_MAX));
            }
        }
    }
}
