//! Histogram construction: granularize the domain, merge greedily from the
//! finest model, polish with local moves, and search granularities by powers
//! of two.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::conditioning;
use crate::criterion::{self, CostBreakdown, HistogramModel, ModelInterval};
use crate::dataset::DataSet;

/// Granularity ceiling of the power-of-two search loop.
pub const GRANULARITY_CAP: u64 = 1 << 30;

/// Accepted cost improvements must clear this margin (nats); smaller
/// differences are rounding noise and would make hill climbing cycle.
pub(crate) const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("domain is a single point but granularity {granularity} > 1")]
    DegenerateDomain { granularity: u64 },
    #[error("granularity {granularity} not in [1, {epsilon_bins}]")]
    InvalidGranularity { granularity: u64, epsilon_bins: u64 },
}

/// Data counts over `granularity` equal-width g-bins. Only nonempty bins are
/// stored; `granularity` can reach 2^30 while the data stays sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct Granularization {
    granularity: u64,
    epsilon_bins: u64,
    domain_lower: f64,
    domain_upper: f64,
    n: u64,
    bins: Vec<GBin>,
    /// Prefix sums of nonempty bin counts, one ahead of `bins`.
    cum: Vec<u64>,
}

/// A nonempty g-bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GBin {
    pub index: u64,
    pub count: u64,
    /// Whether the bin holds two or more distinct source values.
    pub multi_distinct: bool,
}

impl Granularization {
    pub fn granularity(&self) -> u64 {
        self.granularity
    }

    pub fn epsilon_bins(&self) -> u64 {
        self.epsilon_bins
    }

    pub fn domain_lower(&self) -> f64 {
        self.domain_lower
    }

    pub fn domain_upper(&self) -> f64 {
        self.domain_upper
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Nonempty bins in index order.
    pub fn nonempty_bins(&self) -> &[GBin] {
        &self.bins
    }

    pub fn bin_count(&self, index: u64) -> u64 {
        match self.bins.binary_search_by_key(&index, |b| b.index) {
            Ok(i) => self.bins[i].count,
            Err(_) => 0,
        }
    }

    pub fn bin_has_multiple_distinct(&self, index: u64) -> bool {
        match self.bins.binary_search_by_key(&index, |b| b.index) {
            Ok(i) => self.bins[i].multi_distinct,
            Err(_) => false,
        }
    }

    /// Total count in the half-open g-bin range `[lo, hi)`.
    pub fn count_in_range(&self, lo: u64, hi: u64) -> u64 {
        let a = self.bins.partition_point(|b| b.index < lo);
        let b = self.bins.partition_point(|b| b.index < hi);
        self.cum[b] - self.cum[a]
    }
}

/// Options of the granularity search.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Elementary bin budget before any mantissa adjustment.
    pub e_max: u64,
    /// Stop the granularity loop early once past sqrt(n) without improvement.
    pub early_stop: bool,
    /// Fixed elementary bin count, skipping the mantissa-budget adjustment.
    pub force_e: Option<u64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            e_max: 1_000_000_000,
            early_stop: false,
            force_e: None,
        }
    }
}

/// Result of a standard build: the best model found over the granularity
/// loop together with its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub model: HistogramModel,
    pub cost: CostBreakdown,
}

impl BuildOutcome {
    pub fn chosen_granularity(&self) -> u64 {
        self.model.granularity
    }
}

/// Distance to the next representable magnitude, used to give single-valued
/// domains a nonzero width.
fn value_ulp(v: f64) -> f64 {
    let a = v.abs();
    if a == 0.0 {
        return f64::MIN_POSITIVE;
    }
    if a == f64::MAX {
        return a - f64::from_bits(a.to_bits() - 1);
    }
    f64::from_bits(a.to_bits() + 1) - a
}

/// Domain bounds extended by half an elementary bin on each side.
/// For a single-valued dataset the elementary bin is one representable step.
pub(crate) fn domain_bounds(d: &DataSet, epsilon_bins: u64) -> (f64, f64) {
    let (min, max) = (d.min_value(), d.max_value());
    let eps = if max > min {
        (max - min) / epsilon_bins as f64
    } else {
        // A full representable step per side; half of it would round away.
        2.0 * value_ulp(min)
    };
    (min - eps / 2.0, max + eps / 2.0)
}

fn bin_of_norm(norm: f64, granularity: u64) -> u64 {
    ((granularity as f64 * norm) as u64).min(granularity - 1)
}

fn granularize_normalized(
    d: &DataSet,
    norms: &[f64],
    granularity: u64,
    epsilon_bins: u64,
    domain_lower: f64,
    domain_upper: f64,
) -> Granularization {
    let mut bins: Vec<GBin> = Vec::new();
    for (&(_, freq), &norm) in d.entries().iter().zip(norms) {
        let index = bin_of_norm(norm, granularity);
        match bins.last_mut() {
            Some(b) if b.index == index => {
                b.count += freq;
                b.multi_distinct = true;
            }
            _ => bins.push(GBin {
                index,
                count: freq,
                multi_distinct: false,
            }),
        }
    }
    let mut cum = Vec::with_capacity(bins.len() + 1);
    cum.push(0u64);
    for b in &bins {
        cum.push(cum.last().unwrap() + b.count);
    }
    Granularization {
        granularity,
        epsilon_bins,
        domain_lower,
        domain_upper,
        n: d.n(),
        bins,
        cum,
    }
}

fn normalized_positions(d: &DataSet, domain_lower: f64, domain_upper: f64) -> Vec<f64> {
    let span = domain_upper - domain_lower;
    d.entries()
        .iter()
        .map(|&(v, _)| (v - domain_lower) / span)
        .collect()
}

/// Maps every value to a g-bin: with `eps = range / epsilon_bins` and the
/// domain `[min - eps/2, max + eps/2]`, value `x` lands in bin
/// `min(G-1, floor(G * (x - lower) / (upper - lower)))`.
pub fn granularize(
    d: &DataSet,
    granularity: u64,
    epsilon_bins: u64,
) -> Result<Granularization, OptimizerError> {
    if granularity == 0 || granularity > epsilon_bins {
        return Err(OptimizerError::InvalidGranularity {
            granularity,
            epsilon_bins,
        });
    }
    if d.range() == 0.0 && granularity > 1 {
        return Err(OptimizerError::DegenerateDomain { granularity });
    }
    let (lower, upper) = domain_bounds(d, epsilon_bins);
    let norms = normalized_positions(d, lower, upper);
    Ok(granularize_normalized(
        d,
        &norms,
        granularity,
        epsilon_bins,
        lower,
        upper,
    ))
}

/// Heap key: bin-local part of the merge delta, ties broken by the left
/// slot so equal-cost merges pick the leftmost pair.
#[derive(PartialEq)]
struct MergeKey {
    local_delta: f64,
    left_slot: usize,
}

impl Eq for MergeKey {}

impl PartialOrd for MergeKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MergeKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.local_delta
            .total_cmp(&other.local_delta)
            .then(self.left_slot.cmp(&other.left_slot))
    }
}

/// Interval run-length structure of the finest model: every nonempty g-bin
/// is an interval and adjacent empty g-bins are pre-merged into runs.
fn finest_intervals(gr: &Granularization) -> Vec<ModelInterval> {
    let mut intervals = Vec::with_capacity(2 * gr.bins.len() + 1);
    let mut prev_end = 0u64;
    for b in &gr.bins {
        if b.index > prev_end {
            intervals.push(ModelInterval {
                g_width: b.index - prev_end,
                count: 0,
            });
        }
        intervals.push(ModelInterval {
            g_width: 1,
            count: b.count,
        });
        prev_end = b.index + 1;
    }
    if prev_end < gr.granularity {
        intervals.push(ModelInterval {
            g_width: gr.granularity - prev_end,
            count: 0,
        });
    }
    intervals
}

fn model_from_intervals(gr: &Granularization, intervals: Vec<ModelInterval>) -> HistogramModel {
    HistogramModel {
        epsilon_bins: gr.epsilon_bins,
        granularity: gr.granularity,
        domain_lower: gr.domain_lower,
        domain_upper: gr.domain_upper,
        intervals,
    }
}

/// Part of a merge delta that only depends on the pair being merged; the
/// remaining prior terms are shared by every candidate at a given K, so
/// ordering candidates by this value orders them by the full delta.
fn local_merge_delta(left: ModelInterval, right: ModelInterval) -> f64 {
    let factorial = ln_fact(left.count) + ln_fact(right.count) - ln_fact(left.count + right.count);
    factorial + criterion::bin_index_merge_delta(left, right)
}

fn ln_fact(h: u64) -> f64 {
    if h < 2 {
        0.0
    } else {
        statrs::function::gamma::ln_gamma(h as f64 + 1.0)
    }
}

/// Prior terms of a merge delta shared by all pairs of a K-interval model.
fn shared_merge_delta(k_count: usize, g_total: u64, n: u64) -> f64 {
    let k = k_count as f64;
    criterion::universal_code_length(k_count as u64 - 1).expect("k >= 2")
        - criterion::universal_code_length(k_count as u64).expect("k >= 2")
        + ((k - 1.0) / (g_total as f64 + k - 1.0)).ln()
        + ((k - 1.0) / (n as f64 + k - 1.0)).ln()
}

/// Greedy bottom-up merge from the finest model down to a single interval,
/// returning the cheapest model seen along the merge path.
pub fn greedy_build(gr: &Granularization, n: u64) -> HistogramModel {
    debug_assert_eq!(gr.n, n);
    let initial = finest_intervals(gr);
    if initial.len() == 1 {
        return model_from_intervals(gr, initial);
    }

    let slots = initial.len();
    let mut width: Vec<u64> = initial.iter().map(|iv| iv.g_width).collect();
    let mut count: Vec<u64> = initial.iter().map(|iv| iv.count).collect();
    let end = slots;
    let mut next: Vec<usize> = (1..=slots).collect();
    let mut prev: Vec<usize> = std::iter::once(end).chain(0..slots - 1).collect();
    let mut gen: Vec<u32> = vec![0; slots];

    let mut heap: BinaryHeap<Reverse<(MergeKey, u32, u32)>> = BinaryHeap::with_capacity(slots);
    for left in 0..slots - 1 {
        let key = MergeKey {
            local_delta: local_merge_delta(initial[left], initial[left + 1]),
            left_slot: left,
        };
        heap.push(Reverse((key, 0, 0)));
    }

    let initial_model = model_from_intervals(gr, initial);
    let mut running = criterion::genum_cost(&initial_model, n)
        .expect("finest model is consistent")
        .total;
    let mut best_cost = running;
    let mut best_step = 0usize;
    let mut merges: Vec<usize> = Vec::with_capacity(slots - 1);
    let mut k_count = slots;

    while let Some(Reverse((key, gen_l, gen_r))) = heap.pop() {
        let l = key.left_slot;
        if gen[l] != gen_l {
            continue;
        }
        let r = next[l];
        if r == end || gen[r] != gen_r {
            continue;
        }

        running += shared_merge_delta(k_count, gr.granularity, n) + key.local_delta;
        width[l] += width[r];
        count[l] += count[r];
        let after = next[r];
        next[l] = after;
        if after != end {
            prev[after] = l;
        }
        gen[l] = gen[l].wrapping_add(1);
        gen[r] = gen[r].wrapping_add(1);
        k_count -= 1;
        merges.push(l);

        if running < best_cost {
            best_cost = running;
            best_step = merges.len();
        }

        let p = prev[l];
        if p != end {
            let key = MergeKey {
                local_delta: local_merge_delta(
                    ModelInterval { g_width: width[p], count: count[p] },
                    ModelInterval { g_width: width[l], count: count[l] },
                ),
                left_slot: p,
            };
            heap.push(Reverse((key, gen[p], gen[l])));
        }
        if after != end {
            let key = MergeKey {
                local_delta: local_merge_delta(
                    ModelInterval { g_width: width[l], count: count[l] },
                    ModelInterval { g_width: width[after], count: count[after] },
                ),
                left_slot: l,
            };
            heap.push(Reverse((key, gen[l], gen[after])));
        }
    }
    debug_assert_eq!(k_count, 1);

    // Replay the merge prefix that produced the best cost.
    let replayed = replay_merges(gr, &merges[..best_step]);
    model_from_intervals(gr, replayed)
}

fn replay_merges(gr: &Granularization, merges: &[usize]) -> Vec<ModelInterval> {
    let initial = finest_intervals(gr);
    let slots = initial.len();
    let end = slots;
    let mut width: Vec<u64> = initial.iter().map(|iv| iv.g_width).collect();
    let mut count: Vec<u64> = initial.iter().map(|iv| iv.count).collect();
    let mut next: Vec<usize> = (1..=slots).collect();
    let mut prev: Vec<usize> = std::iter::once(end).chain(0..slots - 1).collect();
    for &l in merges {
        let r = next[l];
        width[l] += width[r];
        count[l] += count[r];
        let after = next[r];
        next[l] = after;
        if after != end {
            prev[after] = l;
        }
    }
    let mut out = Vec::new();
    let mut cur = 0usize;
    loop {
        out.push(ModelInterval {
            g_width: width[cur],
            count: count[cur],
        });
        if next[cur] == end {
            break;
        }
        cur = next[cur];
    }
    out
}

/// Stable `h_new ln(g_new) - h_old ln(g_old)` for interval resizes, written
/// so one-g-bin adjustments of huge intervals do not cancel to zero.
fn bin_term_delta(g_old: u64, h_old: u64, g_new: u64, h_new: u64) -> f64 {
    let ratio = (g_new as f64 - g_old as f64) / g_old as f64;
    let width_part = if h_old > 0 { h_old as f64 * ratio.ln_1p() } else { 0.0 };
    let count_part = if h_new >= h_old {
        (h_new - h_old) as f64 * (g_new as f64).ln()
    } else {
        -((h_old - h_new) as f64) * (g_new as f64).ln()
    };
    width_part + count_part
}

/// `ln Gamma(h+1) - ln Gamma(h-c+1)`: sum of `ln i` over the `c` values below
/// `h`, summed directly when short to avoid cancellation of huge log-gammas.
fn ln_fact_ratio(h: u64, c: u64) -> f64 {
    debug_assert!(c <= h);
    if c == 0 {
        return 0.0;
    }
    if c <= 32 {
        (h - c + 1..=h).map(|i| (i as f64).ln()).sum()
    } else {
        ln_fact(h) - ln_fact(h - c)
    }
}

/// Cost delta of transferring the g-bin adjacent to the boundary between
/// intervals `(gl, hl)` and `(gr_w, hr)`; `moved` entries change sides.
/// Only the factorial and bin-index terms change.
fn transfer_delta(
    gl: u64,
    hl: u64,
    gr_w: u64,
    hr: u64,
    moved: u64,
    to_right: bool,
) -> f64 {
    let (hl_new, hr_new) = if to_right {
        (hl - moved, hr + moved)
    } else {
        (hl + moved, hr - moved)
    };
    let (gl_new, gr_new) = if to_right { (gl - 1, gr_w + 1) } else { (gl + 1, gr_w - 1) };
    let factorial = if to_right {
        // Sigma ln h! rises on the right, falls on the left.
        ln_fact_ratio(hr_new, moved) - ln_fact_ratio(hl, moved)
    } else {
        ln_fact_ratio(hl_new, moved) - ln_fact_ratio(hr, moved)
    };
    // multinomial_factorial = ln n! - Sigma ln h!, so Sigma's rise is a fall.
    -factorial
        + bin_term_delta(gl, hl, gl_new, hl_new)
        + bin_term_delta(gr_w, hr, gr_new, hr_new)
}

struct PostState {
    width: Vec<u64>,
    count: Vec<u64>,
    /// Global g-bin start of each interval.
    start: Vec<u64>,
}

impl PostState {
    fn rebuild_starts(&mut self) {
        let mut cum = 0;
        for (s, w) in self.start.iter_mut().zip(&self.width) {
            *s = cum;
            cum += w;
        }
    }
}

/// Hill-climbs the model over three neighborhoods - move a boundary by one
/// g-bin, remove a boundary, insert a boundary - until no move improves the
/// cost. Sweeps are capped to guarantee termination.
pub fn post_optimize(model: HistogramModel, gr: &Granularization, n: u64) -> HistogramModel {
    const MAX_SWEEPS: usize = 20;
    const MAX_SLIDE: usize = 32;

    let mut st = PostState {
        width: model.intervals.iter().map(|iv| iv.g_width).collect(),
        count: model.intervals.iter().map(|iv| iv.count).collect(),
        start: vec![0; model.intervals.len()],
    };
    st.rebuild_starts();
    let g_total = gr.granularity;

    for _ in 0..MAX_SWEEPS {
        let mut improved = false;

        // Boundary moves by one g-bin, sliding while profitable.
        let mut k = 0;
        while k + 1 < st.width.len() {
            let mut slides = 0;
            loop {
                let bpos = st.start[k + 1];
                let mut applied = false;
                if st.width[k] >= 2 {
                    let moved = gr.count_in_range(bpos - 1, bpos);
                    let delta =
                        transfer_delta(st.width[k], st.count[k], st.width[k + 1], st.count[k + 1], moved, true);
                    if delta < -IMPROVEMENT_EPS {
                        st.width[k] -= 1;
                        st.width[k + 1] += 1;
                        st.count[k] -= moved;
                        st.count[k + 1] += moved;
                        st.start[k + 1] -= 1;
                        applied = true;
                    }
                }
                if !applied && st.width[k + 1] >= 2 {
                    let moved = gr.count_in_range(bpos, bpos + 1);
                    let delta =
                        transfer_delta(st.width[k], st.count[k], st.width[k + 1], st.count[k + 1], moved, false);
                    if delta < -IMPROVEMENT_EPS {
                        st.width[k] += 1;
                        st.width[k + 1] -= 1;
                        st.count[k] += moved;
                        st.count[k + 1] -= moved;
                        st.start[k + 1] += 1;
                        applied = true;
                    }
                }
                if !applied {
                    break;
                }
                improved = true;
                slides += 1;
                if slides >= MAX_SLIDE {
                    break; // long relocations are covered by remove + insert
                }
            }
            k += 1;
        }

        // Boundary removals.
        let mut k = 0;
        while k + 1 < st.width.len() {
            let delta = criterion::merge_delta_terms(
                st.width.len(),
                g_total,
                n,
                ModelInterval { g_width: st.width[k], count: st.count[k] },
                ModelInterval { g_width: st.width[k + 1], count: st.count[k + 1] },
            );
            if delta < -IMPROVEMENT_EPS {
                st.width[k] += st.width[k + 1];
                st.count[k] += st.count[k + 1];
                st.width.remove(k + 1);
                st.count.remove(k + 1);
                st.start.truncate(st.width.len());
                st.rebuild_starts();
                improved = true;
            } else {
                k += 1;
            }
        }

        // Boundary insertions at candidate cuts. Inside an empty run the
        // bin-index term h_l ln(o) + h_r ln(G-o) is concave in the offset,
        // so only run endpoints (edges of nonempty bins) can be optimal.
        let mut k = 0;
        while k < st.width.len() {
            let w = st.width[k];
            if w < 2 {
                k += 1;
                continue;
            }
            let s = st.start[k];
            let mut candidates: Vec<u64> = vec![1, w - 1];
            let lo = gr.bins.partition_point(|b| b.index < s);
            let hi = gr.bins.partition_point(|b| b.index < s + w);
            for b in &gr.bins[lo..hi] {
                let off = b.index - s;
                if off >= 1 {
                    candidates.push(off);
                }
                if off + 1 <= w - 1 {
                    candidates.push(off + 1);
                }
            }
            candidates.sort_unstable();
            candidates.dedup();

            let mut best: Option<(f64, u64, u64)> = None;
            for &o in &candidates {
                let hl = gr.count_in_range(s, s + o);
                let hr = st.count[k] - hl;
                let delta = -criterion::merge_delta_terms(
                    st.width.len() + 1,
                    g_total,
                    n,
                    ModelInterval { g_width: o, count: hl },
                    ModelInterval { g_width: w - o, count: hr },
                );
                if delta < -IMPROVEMENT_EPS && best.map_or(true, |(bd, _, _)| delta < bd) {
                    best = Some((delta, o, hl));
                }
            }
            if let Some((_, o, hl)) = best {
                st.width[k] = o;
                let hr = st.count[k] - hl;
                st.count[k] = hl;
                st.width.insert(k + 1, w - o);
                st.count.insert(k + 1, hr);
                st.start.push(0);
                st.rebuild_starts();
                improved = true;
                // Revisit the left piece; it may split again.
            } else {
                k += 1;
            }
        }

        if !improved {
            break;
        }
    }

    let intervals = st
        .width
        .iter()
        .zip(&st.count)
        .map(|(&g_width, &count)| ModelInterval { g_width, count })
        .collect();
    model_from_intervals(gr, intervals)
}

/// Granularities visited by the search: powers of two clamped to
/// `min(2^30, epsilon_bins)`, the clamp included as the final value.
fn granularity_sequence(epsilon_bins: u64) -> impl Iterator<Item = u64> {
    let cap = GRANULARITY_CAP.min(epsilon_bins);
    let mut g = 1u64;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = g;
        if cur >= cap {
            done = true;
            return Some(cap);
        }
        g = (g * 2).min(cap);
        Some(cur)
    })
}

/// Builds the cost-optimal histogram of a dataset: determines the elementary
/// bin budget, then for each granularity in the power-of-two loop runs
/// granularize, greedy merge and post-optimization, keeping the globally
/// cheapest model. With `early_stop`, the loop ends once the granularity
/// exceeds sqrt(n) and three successive granularities brought no improvement.
pub fn build_standard(d: &DataSet, opts: &BuildOptions) -> BuildOutcome {
    let epsilon_bins = opts
        .force_e
        .unwrap_or_else(|| conditioning::effective_epsilon_bins(d, opts.e_max).0)
        .max(1);

    if d.distinct_count() == 1 {
        let gr = granularize(d, 1, epsilon_bins).expect("single bin is always valid");
        let model = model_from_intervals(&gr, finest_intervals(&gr));
        let cost = criterion::genum_cost(&model, d.n()).expect("degenerate model is consistent");
        return BuildOutcome { model, cost };
    }

    let (lower, upper) = domain_bounds(d, epsilon_bins);
    let norms = normalized_positions(d, lower, upper);
    let n = d.n();
    let sqrt_n = (n as f64).sqrt();

    let mut best: Option<BuildOutcome> = None;
    let mut no_improve = 0u32;
    for g in granularity_sequence(epsilon_bins) {
        let gr = granularize_normalized(d, &norms, g, epsilon_bins, lower, upper);
        let model = post_optimize(greedy_build(&gr, n), &gr, n);
        let cost = criterion::genum_cost(&model, n).expect("optimizer output is consistent");
        let improved = best.as_ref().map_or(true, |b| cost.total < b.cost.total);
        if improved {
            best = Some(BuildOutcome { model, cost });
            no_improve = 0;
        } else {
            no_improve += 1;
        }
        if opts.early_stop && (g as f64) > sqrt_n && no_improve >= 3 {
            break;
        }
    }
    best.expect("granularity loop visits at least G = 1")
}
