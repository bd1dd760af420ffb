//! Two-level histogram construction.
//!
//! Practically ill conditioned datasets are first partitioned through a
//! histogram built in the adapted log domain, whose intervals map back to
//! adjacent data subsets with controlled value ranges. Adjacent subsets are
//! re-merged while their union stays well conditioned, residual ill
//! conditioned subsets are split geometrically, and each final subset gets
//! its own standard histogram. Boundary histograms then bridge the empty
//! gaps between neighboring sub-histograms so the output tiles one interval
//! of the real line.

use serde::Serialize;
use thiserror::Error;

use crate::conditioning;
use crate::criterion::HistogramModel;
use crate::dataset::DataSet;
use crate::logdomain;
use crate::optimizer::{self, BuildOptions, BuildOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum TwoLevelError {
    #[error("subset is not predicted ill conditioned; splitting is pointless")]
    NotPich,
    #[error("subset has a single distinct value and cannot be split")]
    UnsplittableDegenerate,
    #[error("geometric splitting needs a same-sign subset")]
    SameSignRequired,
}

/// How a subset of the first-level partition came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetOrigin {
    LogInterval,
    Merged,
    Split,
}

/// A contiguous data subset with its conditioning verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub data: DataSet,
    pub pwch: bool,
    pub origin: SubsetOrigin,
}

/// Ordered, disjoint, covering list of adjacent data subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetPartition {
    pub subsets: Vec<Subset>,
}

impl SubsetPartition {
    /// Whether the subsets are ordered, disjoint and jointly rebuild `d`.
    pub fn covers(&self, d: &DataSet) -> bool {
        let total_n: u64 = self.subsets.iter().map(|s| s.data.n()).sum();
        let total_distinct: usize = self.subsets.iter().map(|s| s.data.distinct_count()).sum();
        let ordered = self
            .subsets
            .windows(2)
            .all(|w| w[0].data.max_value() < w[1].data.min_value());
        total_n == d.n() && total_distinct == d.distinct_count() && ordered
    }
}

/// Geometric split plan of one same-sign subset: `pieces` sub-intervals with
/// log-equal widths, described by the full ascending cut sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitPlan {
    pub pieces: u64,
    pub cut_points: Vec<f64>,
    pub predicted_first_bin_count: f64,
    pub predicted_piece_count: f64,
}

/// One interval of the assembled global histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalInterval {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
    pub density: f64,
    pub boundary: bool,
    pub subset: usize,
}

/// Build parameters of one sub-histogram.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetBuildInfo {
    pub granularity: u64,
    pub epsilon_bins: u64,
    pub cost: f64,
}

/// The final piecewise-constant density summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalHistogram {
    pub intervals: Vec<GlobalInterval>,
    pub n: u64,
    pub subset_count: usize,
    pub two_level_triggered: bool,
    pub per_subset: Vec<SubsetBuildInfo>,
}

impl GlobalHistogram {
    /// Integral of the density over the intervals; 1 up to rounding.
    pub fn density_integral(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.density * (iv.upper - iv.lower))
            .sum()
    }
}

/// Splits a practically ill conditioned dataset into adjacent subsets along
/// the intervals of a histogram built in the adapted log domain. The log
/// build runs with early stopping: it only needs a coarse partition.
pub fn first_level_partition(d: &DataSet, opts: &BuildOptions) -> SubsetPartition {
    let (log_ds, mapping) = logdomain::log_dataset_cr(d);
    let log_opts = BuildOptions {
        e_max: opts.e_max,
        early_stop: true,
        force_e: None,
    };
    let out = optimizer::build_standard(&log_ds, &log_opts);
    let bounds = out.model.bounds();

    let entries = d.entries();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for &log_bound in &bounds[1..bounds.len() - 1] {
        let cut = logdomain::invert_bound(log_bound, &mapping)
            .expect("interior log bounds invert inside the data hull");
        let end = entries.partition_point(|&(v, _)| v <= cut);
        if end > start {
            groups.push((start, end));
            start = end;
        }
    }
    if start < entries.len() {
        groups.push((start, entries.len()));
    }

    let subsets = groups
        .into_iter()
        .map(|(s, e)| {
            let data = DataSet::from_entry_range(d, s, e);
            let pwch = !conditioning::is_pich(&data, opts.e_max);
            Subset {
                data,
                pwch,
                origin: SubsetOrigin::LogInterval,
            }
        })
        .collect();
    SubsetPartition { subsets }
}

/// Replaces adjacent subset pairs by their union while the union stays
/// practically well conditioned, sweeping left to right until a fixpoint.
pub fn merge_adjacent_pwch(p: SubsetPartition, e_max: u64) -> SubsetPartition {
    let mut subsets = p.subsets;
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < subsets.len() {
            let union = DataSet::concat(&subsets[i].data, &subsets[i + 1].data);
            if !conditioning::is_pich(&union, e_max) {
                subsets[i] = Subset {
                    data: union,
                    pwch: true,
                    origin: SubsetOrigin::Merged,
                };
                subsets.remove(i + 1);
                changed = true;
            } else {
                i += 1;
            }
        }
        if !changed {
            return SubsetPartition { subsets };
        }
    }
}

/// Upper bound on split fan-out; a guard for pathological subsets whose
/// predicted collision count never clears the threshold.
const MAX_SPLIT_PIECES: u64 = 65_536;

/// Predicted count of the densest elementary bin when `[a, b]` (log-uniform,
/// `n` entries) is cut into `k` log-equal pieces probed at `t_e` bins each.
fn predicted_first_bin_count(log_ratio: f64, n: f64, k: f64, t_e: f64) -> f64 {
    let lr = log_ratio / k;
    let n_ik = n / k;
    if lr == 0.0 {
        return n_ik / t_e;
    }
    n_ik * (lr.exp_m1() / t_e).ln_1p() / lr
}

/// Splits a same-sign PICH subset into the smallest number of log-equal
/// pieces whose predicted densest bin drops below `ln` of the piece count.
/// The piece count is searched by dichotomy and double-checked against the
/// predicate; a linear scan takes over if the predicted count turns out
/// non-monotone.
pub fn split_pich_subset(
    s: &DataSet,
    t_e: u64,
) -> Result<(SplitPlan, Vec<DataSet>), TwoLevelError> {
    let positive = s.min_value() > 0.0;
    let negative = s.max_value() < 0.0;
    if !positive && !negative {
        return Err(TwoLevelError::SameSignRequired);
    }
    if s.distinct_count() < 2 {
        return Err(TwoLevelError::UnsplittableDegenerate);
    }
    let (a, b) = if positive {
        (s.min_value(), s.max_value())
    } else {
        (-s.max_value(), -s.min_value())
    };
    let log_ratio = b.ln() - a.ln();
    let n = s.n() as f64;
    let t = t_e as f64;
    let pred = |k: u64| {
        let kf = k as f64;
        let n_ik = n / kf;
        if n_ik <= 1.0 {
            return false;
        }
        predicted_first_bin_count(log_ratio, n, kf, t) < n_ik.ln()
    };
    if pred(1) {
        return Err(TwoLevelError::NotPich);
    }

    let n_max = s.n().max(2);
    let cap = n_max.min(MAX_SPLIT_PIECES);
    let k = smallest_satisfying(&pred, n_max, cap);

    // Geometric cut magnitudes, endpoints pinned to the data range.
    let kf = k as f64;
    let mut magnitudes: Vec<f64> = Vec::with_capacity(k as usize + 1);
    magnitudes.push(a);
    for j in 1..k {
        let m = (a.ln() + (j as f64 / kf) * log_ratio).exp();
        magnitudes.push(m.clamp(a, b));
    }
    magnitudes.push(b);
    let cut_points: Vec<f64> = if positive {
        magnitudes.clone()
    } else {
        magnitudes.iter().rev().map(|&m| -m).collect()
    };

    let entries = s.entries();
    let mut pieces = Vec::new();
    let mut start = 0usize;
    for &cut in &cut_points[1..cut_points.len() - 1] {
        let end = entries.partition_point(|&(v, _)| v <= cut);
        if end > start {
            pieces.push(DataSet::from_entry_range(s, start, end));
            start = end;
        }
    }
    if start < entries.len() {
        pieces.push(DataSet::from_entry_range(s, start, entries.len()));
    }

    let plan = SplitPlan {
        pieces: k,
        cut_points,
        predicted_first_bin_count: predicted_first_bin_count(log_ratio, n, kf, t),
        predicted_piece_count: n / kf,
    };
    Ok((plan, pieces))
}

/// Smallest k in [2, n_max] satisfying the predicate, by dichotomy with a
/// linear-scan fallback when the predicate is not monotone; `cap` when
/// nothing satisfies it.
fn smallest_satisfying(pred: &dyn Fn(u64) -> bool, n_max: u64, cap: u64) -> u64 {
    if pred(2) {
        return 2;
    }
    if pred(n_max) {
        let (mut lo, mut hi) = (2u64, n_max);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pred(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if pred(hi) && !pred(hi - 1) {
            return hi;
        }
    }
    for k in 2..=cap {
        if pred(k) {
            return k;
        }
    }
    cap
}

/// One side of a boundary reconciliation: the outermost interval of a
/// sub-histogram, its data entries, and the g-bin grid it was built on.
#[derive(Debug, Clone)]
pub struct BoundarySide {
    pub lower: f64,
    pub upper: f64,
    pub data: DataSet,
    pub grid_origin: f64,
    pub grid_step: f64,
}

/// An interval produced by boundary reconciliation, with the number of
/// distinct source entries it holds (used to re-slice entry ranges).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPiece {
    pub lower: f64,
    pub upper: f64,
    pub count: u64,
    pub distinct_entries: usize,
}

fn snap_to_grid(x: f64, origin: f64, step: f64) -> f64 {
    if !(step > 0.0) || !step.is_finite() {
        return x;
    }
    origin + ((x - origin) / step).round() * step
}

/// Per-entry interval assignment of a model, in entry order.
fn interval_assignment(model: &HistogramModel, data: &DataSet) -> Vec<usize> {
    let span = model.domain_upper - model.domain_lower;
    let g = model.granularity;
    let mut cum_widths: Vec<u64> = Vec::with_capacity(model.intervals.len());
    let mut acc = 0u64;
    for iv in &model.intervals {
        acc += iv.g_width;
        cum_widths.push(acc);
    }
    let mut idx = 0usize;
    data.entries()
        .iter()
        .map(|&(v, _)| {
            let bin = ((g as f64 * ((v - model.domain_lower) / span)) as u64).min(g - 1);
            while cum_widths[idx] <= bin {
                idx += 1;
            }
            idx
        })
        .collect()
}

/// Rebuilds the junction between two adjacent sub-histograms: a histogram of
/// the union of their outermost intervals' data decides how the empty gap is
/// covered, and the two original intervals are replaced by one, two or three
/// intervals whose outer bounds stay put. New inner bounds snap to the g-bin
/// grid of the side that contributed the adjacent data when that keeps the
/// data partition intact; an empty gap interval collapses to a single shared
/// bound at the midpoint of the data gap.
pub fn build_boundary(
    left: &BoundarySide,
    right: &BoundarySide,
    opts: &BuildOptions,
    _total_n: u64,
) -> Vec<BoundaryPiece> {
    let d_b = DataSet::concat(&left.data, &right.data);
    let n_b = d_b.n();
    let e_b = d_b.distinct_count();
    let v_lmax = left.data.max_value();
    let v_rmin = right.data.min_value();
    let gap_mid = v_lmax + (v_rmin - v_lmax) / 2.0;

    if e_b == 1 {
        return vec![BoundaryPiece {
            lower: left.lower,
            upper: right.upper,
            count: n_b,
            distinct_entries: 1,
        }];
    }

    let out = optimizer::build_standard(&d_b, opts);
    let model = &out.model;
    let assignment = interval_assignment(model, &d_b);
    let span = model.domain_upper - model.domain_lower;
    let gap_bin =
        ((model.granularity as f64 * ((gap_mid - model.domain_lower) / span)) as u64)
            .min(model.granularity - 1);
    let mut acc = 0u64;
    let mut gap_interval = model.intervals.len() - 1;
    for (i, iv) in model.intervals.iter().enumerate() {
        acc += iv.g_width;
        if gap_bin < acc {
            gap_interval = i;
            break;
        }
    }

    let mut n_below = 0u64;
    let mut n_inside = 0u64;
    let mut n_above = 0u64;
    let mut e_below = 0usize;
    let mut e_inside = 0usize;
    let mut e_above = 0usize;
    let mut v_below_max = f64::NEG_INFINITY;
    let mut v_inside_min = f64::INFINITY;
    let mut v_inside_max = f64::NEG_INFINITY;
    let mut v_above_min = f64::INFINITY;
    for (&(v, f), &iv) in d_b.entries().iter().zip(&assignment) {
        if iv < gap_interval {
            n_below += f;
            e_below += 1;
            v_below_max = v_below_max.max(v);
        } else if iv == gap_interval {
            n_inside += f;
            e_inside += 1;
            v_inside_min = v_inside_min.min(v);
            v_inside_max = v_inside_max.max(v);
        } else {
            n_above += f;
            e_above += 1;
            v_above_min = v_above_min.min(v);
        }
    }

    if n_below == 0 && n_above == 0 {
        return vec![BoundaryPiece {
            lower: left.lower,
            upper: right.upper,
            count: n_b,
            distinct_entries: e_b,
        }];
    }
    if n_inside == 0 {
        // The gap interval is empty: two intervals sharing one bound inside
        // the data gap. The grids of the two sides disagree here, so the
        // midpoint wins.
        return vec![
            BoundaryPiece {
                lower: left.lower,
                upper: gap_mid,
                count: n_below,
                distinct_entries: e_below,
            },
            BoundaryPiece {
                lower: gap_mid,
                upper: right.upper,
                count: n_above,
                distinct_entries: e_above,
            },
        ];
    }

    let bounds = model.bounds();
    let b_lo_raw = bounds[gap_interval];
    let b_hi_raw = bounds[gap_interval + 1];
    let mut b_lo = if n_below > 0 {
        let cand = snap_to_grid(b_lo_raw, left.grid_origin, left.grid_step);
        if cand > v_below_max && cand <= v_inside_min && cand > left.lower {
            cand
        } else {
            b_lo_raw
        }
    } else {
        left.lower
    };
    let mut b_hi = if n_above > 0 {
        let cand = snap_to_grid(b_hi_raw, right.grid_origin, right.grid_step);
        if cand > v_inside_max && cand <= v_above_min && cand < right.upper {
            cand
        } else {
            b_hi_raw
        }
    } else {
        right.upper
    };
    if !(b_lo < b_hi) {
        b_lo = if n_below > 0 { b_lo_raw } else { left.lower };
        b_hi = if n_above > 0 { b_hi_raw } else { right.upper };
    }

    let mut pieces = Vec::with_capacity(3);
    if n_below > 0 {
        pieces.push(BoundaryPiece {
            lower: left.lower,
            upper: b_lo,
            count: n_below,
            distinct_entries: e_below,
        });
    }
    pieces.push(BoundaryPiece {
        lower: if n_below > 0 { b_lo } else { left.lower },
        upper: if n_above > 0 { b_hi } else { right.upper },
        count: n_inside,
        distinct_entries: e_inside,
    });
    if n_above > 0 {
        pieces.push(BoundaryPiece {
            lower: b_hi,
            upper: right.upper,
            count: n_above,
            distinct_entries: e_above,
        });
    }
    debug_assert!(pieces.windows(2).all(|w| w[0].upper == w[1].lower));
    debug_assert_eq!(pieces.iter().map(|p| p.count).sum::<u64>(), n_b);
    pieces
}

/// Interval record used while assembling the global histogram.
#[derive(Debug, Clone)]
struct AsmInterval {
    lower: f64,
    upper: f64,
    count: u64,
    boundary: bool,
    subset: usize,
    entry_start: usize,
    entry_end: usize,
    grid_origin: f64,
    grid_step: f64,
}

/// Wraps a standard build outcome as a single-subset global histogram.
pub fn from_standard(d: &DataSet, out: &BuildOutcome) -> GlobalHistogram {
    let n = d.n();
    let bounds = out.model.bounds();
    let intervals = out
        .model
        .intervals
        .iter()
        .enumerate()
        .map(|(i, iv)| {
            let lower = bounds[i];
            let upper = bounds[i + 1];
            GlobalInterval {
                lower,
                upper,
                count: iv.count,
                density: iv.count as f64 / (n as f64 * (upper - lower)),
                boundary: false,
                subset: 0,
            }
        })
        .collect();
    GlobalHistogram {
        intervals,
        n,
        subset_count: 1,
        two_level_triggered: false,
        per_subset: vec![SubsetBuildInfo {
            granularity: out.model.granularity,
            epsilon_bins: out.model.epsilon_bins,
            cost: out.cost.total,
        }],
    }
}

/// Contiguous sign groups of a dataset: negatives, exact zeros, positives.
fn sign_groups(d: &DataSet) -> Vec<DataSet> {
    let entries = d.entries();
    let neg_end = entries.partition_point(|&(v, _)| v < 0.0);
    let zero_end = entries.partition_point(|&(v, _)| v <= 0.0);
    let mut out = Vec::new();
    if neg_end > 0 {
        out.push(DataSet::from_entry_range(d, 0, neg_end));
    }
    if zero_end > neg_end {
        out.push(DataSet::from_entry_range(d, neg_end, zero_end));
    }
    if entries.len() > zero_end {
        out.push(DataSet::from_entry_range(d, zero_end, entries.len()));
    }
    out
}

/// Splits every remaining PICH subset: mixed-sign subsets first at zero,
/// then each ill conditioned side geometrically.
fn split_phase(p: SubsetPartition, e_max: u64) -> Vec<Subset> {
    let mut out = Vec::new();
    for s in p.subsets {
        if s.pwch {
            out.push(s);
            continue;
        }
        let groups = sign_groups(&s.data);
        let split_at_zero = groups.len() > 1;
        for side in groups {
            if !conditioning::is_pich(&side, e_max) {
                let origin = if split_at_zero { SubsetOrigin::Split } else { s.origin };
                out.push(Subset { data: side, pwch: true, origin });
                continue;
            }
            let t_e =
                conditioning::t_e_threshold(conditioning::effective_epsilon_bins(&side, e_max).0);
            match split_pich_subset(&side, t_e) {
                Ok((_plan, pieces)) => {
                    for piece in pieces {
                        let pwch = !conditioning::is_pich(&piece, e_max);
                        out.push(Subset {
                            data: piece,
                            pwch,
                            origin: SubsetOrigin::Split,
                        });
                    }
                }
                Err(_) => {
                    // Degenerate or mispredicted subset: build it as is.
                    out.push(Subset {
                        data: side,
                        pwch: false,
                        origin: SubsetOrigin::Split,
                    });
                }
            }
        }
    }
    out
}

/// Builds the output histogram of a dataset. Practically well conditioned
/// data (including data at the mantissa limit) goes straight through the
/// standard builder; otherwise the two-level pipeline partitions the data,
/// builds per-subset histograms and reconciles their boundaries.
pub fn build_two_level(d: &DataSet, opts: &BuildOptions) -> GlobalHistogram {
    if !conditioning::is_pich(d, opts.e_max) {
        let out = optimizer::build_standard(d, opts);
        return from_standard(d, &out);
    }

    let partition = merge_adjacent_pwch(first_level_partition(d, opts), opts.e_max);
    let split = split_phase(partition, opts.e_max);
    // Splitting at zero can strand a well-conditioned sliver (for example a
    // distribution tail that shared a log interval with opposite-sign
    // values); a second merge pass reattaches such fragments.
    let subsets = merge_adjacent_pwch(SubsetPartition { subsets: split }, opts.e_max).subsets;
    debug_assert!(SubsetPartition { subsets: subsets.clone() }.covers(d));

    // Second level: per-subset standard histograms.
    let mut asm: Vec<AsmInterval> = Vec::new();
    let mut per_subset = Vec::with_capacity(subsets.len());
    let mut entry_offset = 0usize;
    for (si, s) in subsets.iter().enumerate() {
        let out = optimizer::build_standard(&s.data, opts);
        per_subset.push(SubsetBuildInfo {
            granularity: out.model.granularity,
            epsilon_bins: out.model.epsilon_bins,
            cost: out.cost.total,
        });
        let bounds = out.model.bounds();
        let assignment = interval_assignment(&out.model, &s.data);
        let grid_step = (out.model.domain_upper - out.model.domain_lower)
            / out.model.granularity as f64;
        for (i, iv) in out.model.intervals.iter().enumerate() {
            let entry_start = entry_offset + assignment.partition_point(|&a| a < i);
            let entry_end = entry_offset + assignment.partition_point(|&a| a <= i);
            asm.push(AsmInterval {
                lower: bounds[i],
                upper: bounds[i + 1],
                count: iv.count,
                boundary: false,
                subset: si,
                entry_start,
                entry_end,
                grid_origin: out.model.domain_lower,
                grid_step,
            });
        }
        entry_offset += s.data.distinct_count();
    }

    // Boundary reconciliation between adjacent subsets, left to right.
    for junction in 0..subsets.len().saturating_sub(1) {
        let right_first = asm
            .iter()
            .position(|iv| iv.subset == junction + 1)
            .expect("every subset contributes at least one interval");
        let li = right_first - 1;
        let left_side = BoundarySide {
            lower: asm[li].lower,
            upper: asm[li].upper,
            data: DataSet::from_entry_range(d, asm[li].entry_start, asm[li].entry_end),
            grid_origin: asm[li].grid_origin,
            grid_step: asm[li].grid_step,
        };
        let right_side = BoundarySide {
            lower: asm[right_first].lower,
            upper: asm[right_first].upper,
            data: DataSet::from_entry_range(d, asm[right_first].entry_start, asm[right_first].entry_end),
            grid_origin: asm[right_first].grid_origin,
            grid_step: asm[right_first].grid_step,
        };
        let pieces = build_boundary(&left_side, &right_side, opts, d.n());

        let left_subset = asm[li].subset;
        let right_subset = asm[right_first].subset;
        let entry_start = asm[li].entry_start;
        let entry_end = asm[right_first].entry_end;
        let (lg_o, lg_s) = (asm[li].grid_origin, asm[li].grid_step);
        let (rg_o, rg_s) = (asm[right_first].grid_origin, asm[right_first].grid_step);
        let mut replacement = Vec::with_capacity(pieces.len());
        let mut cursor = entry_start;
        let last = pieces.len() - 1;
        for (pi, p) in pieces.iter().enumerate() {
            let e_end = if pi == last { entry_end } else { cursor + p.distinct_entries };
            let (g_o, g_s) = if pi == last && pieces.len() > 1 {
                (rg_o, rg_s)
            } else {
                (lg_o, lg_s)
            };
            replacement.push(AsmInterval {
                lower: p.lower,
                upper: p.upper,
                count: p.count,
                boundary: true,
                subset: if pi == last && pieces.len() > 1 { right_subset } else { left_subset },
                entry_start: cursor,
                entry_end: e_end,
                grid_origin: g_o,
                grid_step: g_s,
            });
            cursor = e_end;
        }
        asm.splice(li..=right_first, replacement);
    }

    let n = d.n();
    let intervals: Vec<GlobalInterval> = asm
        .iter()
        .map(|iv| GlobalInterval {
            lower: iv.lower,
            upper: iv.upper,
            count: iv.count,
            density: iv.count as f64 / (n as f64 * (iv.upper - iv.lower)),
            boundary: iv.boundary,
            subset: iv.subset,
        })
        .collect();
    debug_assert!(intervals.windows(2).all(|w| w[0].upper == w[1].lower));
    debug_assert_eq!(intervals.iter().map(|iv| iv.count).sum::<u64>(), n);

    GlobalHistogram {
        intervals,
        n,
        subset_count: subsets.len(),
        two_level_triggered: true,
        per_subset,
    }
}
