//! Regularized irregular histograms for univariate numeric data.
//!
//! The estimator selects the number of bins, their widths and the domain
//! granularity by minimizing an enumerative MDL code length, so it needs no
//! user parameters. On top of the standard single-pass builder
//! ([`optimizer::build_standard`]) the crate layers a two-level construction
//! ([`twolevel::build_two_level`]) that first partitions ill-conditioned data
//! (outliers, heavy tails, values near the floating-point resolution limit)
//! into well-conditioned subsets through a log-domain histogram, then builds
//! and stitches per-subset histograms into one global piecewise-constant
//! density summary.
//!
//! Modules:
//! - [`dataset`]: canonical sorted (value, frequency) representation
//! - [`criterion`]: code-length criteria and their O(1) merge deltas
//! - [`optimizer`]: granularization, greedy merging, post-optimization,
//!   granularity search
//! - [`conditioning`]: collision statistics and the WCH/ICH/RICH/PICH verdicts
//! - [`logdomain`]: log transforms over computer-representable reals
//! - [`twolevel`]: the two-level pipeline and global histogram assembly
//! - [`synthlab`]: reproducible synthetic data generators and closed-form
//!   detection thresholds
//! - [`io`]: text input formats used by the CLI

pub mod conditioning;
pub mod criterion;
pub mod dataset;
pub mod experiments;
pub mod io;
pub mod logdomain;
pub mod optimizer;
pub mod synthlab;
pub mod twolevel;

pub use conditioning::ConditioningReport;
pub use criterion::{CostBreakdown, HistogramModel, ModelInterval};
pub use dataset::DataSet;
pub use optimizer::{BuildOptions, BuildOutcome};
pub use twolevel::GlobalHistogram;
