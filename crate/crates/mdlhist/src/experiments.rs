//! Desk-scale reruns of the evaluation protocols: parameter sweeps comparing
//! the standard and two-level builders on synthetic datasets, with
//! repetitions spread over split PRNG streams and run in parallel.

use rayon::prelude::*;
use serde::Serialize;

use crate::optimizer::{self, BuildOptions};
use crate::synthlab::{Component, GeneratorKind, GeneratorSpec, OutlierSpec};
use crate::twolevel;

/// The available experiment protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentName {
    /// Gaussian data plus one outlier at 2^i.
    OneOutlier,
    /// Gaussian data plus 100 outliers of spread 2^i * 1e-10.
    OutlierDist,
    /// Equal mixture of two Gaussians with the second mean at 2^i.
    HeavyTail,
    /// Binomial-weight 21-component mixture at sizes n = 2^i.
    Scalability,
}

impl std::str::FromStr for ExperimentName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-outlier" => Ok(Self::OneOutlier),
            "outlier-dist" => Ok(Self::OutlierDist),
            "heavy-tail" => Ok(Self::HeavyTail),
            "scalability" => Ok(Self::Scalability),
            other => Err(format!(
                "unknown experiment '{other}', expected one-outlier, outlier-dist, heavy-tail or scalability"
            )),
        }
    }
}

impl ExperimentName {
    pub fn csv_name(&self) -> &'static str {
        match self {
            Self::OneOutlier => "one-outlier",
            Self::OutlierDist => "outlier-dist",
            Self::HeavyTail => "heavy-tail",
            Self::Scalability => "scalability",
        }
    }

    /// Name of the swept parameter column.
    pub fn param_name(&self) -> &'static str {
        match self {
            Self::OneOutlier => "v_out",
            Self::OutlierDist => "sigma_o",
            Self::HeavyTail => "mu_2",
            Self::Scalability => "n",
        }
    }

    pub fn default_max_exponent(&self) -> u32 {
        match self {
            Self::OneOutlier | Self::HeavyTail => 34,
            Self::OutlierDist => 67,
            Self::Scalability => 24,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub reps: u64,
    pub seed: u64,
    pub max_exponent: u32,
    /// Early-stop the granularity loop of every build (always on for the
    /// scalability protocol, where full loops are needlessly slow).
    pub early_stop: bool,
}

/// Aggregates of one swept parameter value.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub param: f64,
    pub standard_k_mean: f64,
    pub standard_k_std: f64,
    pub twolevel_k_mean: f64,
    pub twolevel_k_std: f64,
    pub subsets_mean: f64,
    pub subsets_std: f64,
    pub elapsed_seconds: f64,
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn spec_for(name: ExperimentName, exponent: u32, seed: u64, stream: u64) -> GeneratorSpec {
    match name {
        ExperimentName::OneOutlier => GeneratorSpec {
            kind: GeneratorKind::Gaussian { mu: 1.0, sigma: 0.1 },
            n: 10_000,
            seed,
            stream,
            outliers: Some(OutlierSpec::Fixed {
                count: 1,
                value: (exponent as f64).exp2(),
            }),
        },
        ExperimentName::OutlierDist => GeneratorSpec {
            kind: GeneratorKind::Gaussian { mu: 1.0, sigma: 0.1 },
            n: 10_000,
            seed,
            stream,
            outliers: Some(OutlierSpec::Gaussian {
                count: 100,
                mu: 1.0,
                sigma: (exponent as f64).exp2() * 1e-10,
            }),
        },
        ExperimentName::HeavyTail => {
            let mu2 = (exponent as f64).exp2();
            GeneratorSpec {
                kind: GeneratorKind::GaussianMixture {
                    components: vec![
                        Component { weight: 0.5, mu: 1.0, sigma: 0.1 },
                        Component { weight: 0.5, mu: mu2, sigma: mu2 / 10.0 },
                    ],
                },
                n: 20_000,
                seed,
                stream,
                outliers: None,
            }
        }
        ExperimentName::Scalability => GeneratorSpec {
            kind: GeneratorKind::BinomialMixture { trials: 20, sigma: 0.25 },
            n: 1u64 << exponent,
            seed,
            stream,
            outliers: None,
        },
    }
}

/// Swept parameter value reported for a given exponent.
fn param_for(name: ExperimentName, exponent: u32) -> f64 {
    match name {
        ExperimentName::OneOutlier | ExperimentName::HeavyTail => (exponent as f64).exp2(),
        ExperimentName::OutlierDist => (exponent as f64).exp2() * 1e-10,
        ExperimentName::Scalability => (1u64 << exponent) as f64,
    }
}

struct RepOutcome {
    standard_k: f64,
    twolevel_k: f64,
    subsets: f64,
    seconds: f64,
}

fn run_rep(name: ExperimentName, cfg: &ExperimentConfig, exponent: u32, rep: u64) -> RepOutcome {
    let spec = spec_for(name, exponent, cfg.seed, rep);
    let d = crate::synthlab::generate(&spec).expect("experiment specs are valid");
    let opts = BuildOptions {
        early_stop: cfg.early_stop || name == ExperimentName::Scalability,
        ..Default::default()
    };
    // Build time excludes generation and canonicalization.
    let started = std::time::Instant::now();
    let standard = optimizer::build_standard(&d, &opts);
    let two = twolevel::build_two_level(&d, &opts);
    let seconds = started.elapsed().as_secs_f64();
    RepOutcome {
        standard_k: standard.model.interval_count() as f64,
        twolevel_k: two.intervals.len() as f64,
        subsets: two.subset_count as f64,
        seconds,
    }
}

fn sweep_exponents(name: ExperimentName, cfg: &ExperimentConfig) -> Vec<u32> {
    match name {
        ExperimentName::Scalability => (1..=cfg.max_exponent).collect(),
        _ => (0..=cfg.max_exponent).collect(),
    }
}

/// Runs one experiment protocol and returns a row per swept value.
pub fn run_experiment(name: ExperimentName, cfg: &ExperimentConfig) -> Vec<ExperimentRow> {
    let reps = if name == ExperimentName::Scalability { 1 } else { cfg.reps.max(1) };
    sweep_exponents(name, cfg)
        .into_iter()
        .map(|exponent| {
            let outcomes: Vec<RepOutcome> = (0..reps)
                .into_par_iter()
                .map(|rep| run_rep(name, cfg, exponent, rep))
                .collect();
            let std_k: Vec<f64> = outcomes.iter().map(|o| o.standard_k).collect();
            let two_k: Vec<f64> = outcomes.iter().map(|o| o.twolevel_k).collect();
            let subs: Vec<f64> = outcomes.iter().map(|o| o.subsets).collect();
            let (sk_m, sk_s) = mean_std(&std_k);
            let (tk_m, tk_s) = mean_std(&two_k);
            let (su_m, su_s) = mean_std(&subs);
            ExperimentRow {
                param: param_for(name, exponent),
                standard_k_mean: sk_m,
                standard_k_std: sk_s,
                twolevel_k_mean: tk_m,
                twolevel_k_std: tk_s,
                subsets_mean: su_m,
                subsets_std: su_s,
                elapsed_seconds: outcomes.iter().map(|o| o.seconds).sum::<f64>()
                    / outcomes.len() as f64,
            }
        })
        .collect()
}

/// Helper shared with the CLI: plot rows of a global histogram.
pub fn plot_rows(h: &twolevel::GlobalHistogram) -> Vec<(f64, f64, u64, f64)> {
    h.intervals
        .iter()
        .map(|iv| (iv.lower, iv.upper, iv.count, iv.density))
        .collect()
}
