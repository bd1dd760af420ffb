//! Reproducible synthetic datasets and closed-form conditioning thresholds.
//!
//! Sampling uses ChaCha8, a portable counter-based generator with split
//! streams, and maps uniforms through the inverse normal CDF, so a (spec,
//! seed) pair yields the same dataset on every platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::DataSet;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("n must be at least 2")]
    InvalidN,
}

/// One mixture component: selection weight and normal parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// Distribution families of the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GeneratorKind {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mu: f64, sigma: f64 },
    GaussianMixture { components: Vec<Component> },
    /// `trials + 1` components with weights `C(trials, i) / 2^trials`,
    /// means `i` and a shared standard deviation.
    BinomialMixture { trials: u32, sigma: f64 },
}

/// Optional contamination appended after the `n` base samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutlierSpec {
    Fixed { count: u64, value: f64 },
    Gaussian { count: u64, mu: f64, sigma: f64 },
}

/// A deterministic dataset recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: u64,
    pub seed: u64,
    /// Stream index for repetition harnesses; same seed, disjoint streams.
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub outliers: Option<OutlierSpec>,
}

impl GeneratorSpec {
    fn validate(&self) -> Result<(), SynthError> {
        if self.n == 0 {
            return Err(SynthError::InvalidSpec("n must be positive".into()));
        }
        match &self.kind {
            GeneratorKind::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(SynthError::InvalidSpec("uniform needs lo < hi".into()));
                }
            }
            GeneratorKind::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !(*sigma > 0.0) {
                    return Err(SynthError::InvalidSpec("gaussian needs sigma > 0".into()));
                }
            }
            GeneratorKind::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(SynthError::InvalidSpec("mixture needs components".into()));
                }
                let total: f64 = components.iter().map(|c| c.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(SynthError::InvalidSpec(format!(
                        "weights sum to {total}, expected 1"
                    )));
                }
                if components.iter().any(|c| !(c.sigma > 0.0) || c.weight < 0.0) {
                    return Err(SynthError::InvalidSpec(
                        "components need sigma > 0 and weight >= 0".into(),
                    ));
                }
            }
            GeneratorKind::BinomialMixture { trials, sigma } => {
                if *trials == 0 || *trials > 62 || !(*sigma > 0.0) {
                    return Err(SynthError::InvalidSpec(
                        "binomial mixture needs 1 <= trials <= 62 and sigma > 0".into(),
                    ));
                }
            }
        }
        if let Some(OutlierSpec::Fixed { value, .. }) = self.outliers {
            if !value.is_finite() {
                return Err(SynthError::InvalidSpec("outlier value must be finite".into()));
            }
        }
        if let Some(OutlierSpec::Gaussian { sigma, .. }) = self.outliers {
            if !(sigma > 0.0) {
                return Err(SynthError::InvalidSpec("outlier sigma must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Uniform draw in [0, 1) with 53 random bits.
fn unit_open_low(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Uniform draw strictly inside (0, 1), safe for inverse CDFs.
fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

fn standard_normal(rng: &mut ChaCha8Rng, normal: &Normal) -> f64 {
    normal.inverse_cdf(unit_open(rng))
}

fn binomial_weights(trials: u32) -> Vec<f64> {
    let mut c: u64 = 1;
    let denom = (1u64 << trials) as f64;
    (0..=trials as u64)
        .map(|i| {
            let w = c as f64 / denom;
            if i < trials as u64 {
                c = c * (trials as u64 - i) / (i + 1);
            }
            w
        })
        .collect()
}

fn pick_component(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Draws the dataset described by a spec. Outliers are appended after the
/// `n` base samples, before canonicalization.
pub fn generate(spec: &GeneratorSpec) -> Result<DataSet, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let total = spec.n
        + match spec.outliers {
            Some(OutlierSpec::Fixed { count, .. }) | Some(OutlierSpec::Gaussian { count, .. }) => count,
            None => 0,
        };
    let mut values: Vec<f64> = Vec::with_capacity(total as usize);

    match &spec.kind {
        GeneratorKind::Uniform { lo, hi } => {
            for _ in 0..spec.n {
                values.push(lo + (hi - lo) * unit_open_low(&mut rng));
            }
        }
        GeneratorKind::Gaussian { mu, sigma } => {
            for _ in 0..spec.n {
                values.push(mu + sigma * standard_normal(&mut rng, &normal));
            }
        }
        GeneratorKind::GaussianMixture { components } => {
            let weights: Vec<f64> = components.iter().map(|c| c.weight).collect();
            for _ in 0..spec.n {
                let i = pick_component(&weights, unit_open_low(&mut rng));
                values.push(components[i].mu + components[i].sigma * standard_normal(&mut rng, &normal));
            }
        }
        GeneratorKind::BinomialMixture { trials, sigma } => {
            let weights = binomial_weights(*trials);
            for _ in 0..spec.n {
                let i = pick_component(&weights, unit_open_low(&mut rng));
                values.push(i as f64 + sigma * standard_normal(&mut rng, &normal));
            }
        }
    }

    match spec.outliers {
        Some(OutlierSpec::Fixed { count, value }) => {
            values.extend(std::iter::repeat(value).take(count as usize));
        }
        Some(OutlierSpec::Gaussian { count, mu, sigma }) => {
            for _ in 0..count {
                values.push(mu + sigma * standard_normal(&mut rng, &normal));
            }
        }
        None => {}
    }

    DataSet::from_values(&values).map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

/// Expected minimum gap between `n` points drawn uniformly on a unit range.
pub fn expected_min_gap_uniform(n: u64) -> Result<f64, SynthError> {
    if n < 2 {
        return Err(SynthError::InvalidN);
    }
    let nf = n as f64;
    Ok(1.0 / (nf * nf - 1.0))
}

/// Dataset size at which a uniform sample's granular length reaches `e`.
pub fn ich_threshold_uniform(e: u64) -> f64 {
    (e as f64).sqrt()
}

/// Dataset size at which a Gaussian sample's granular length reaches `e`,
/// from the binomial/Stirling approximation `(2/pi)(1 + 1/log10 n) n^2 = e`,
/// solved numerically. The decimal-log correction matches the reference
/// threshold of about 36,300 at e = 1e9.
pub fn ich_threshold_gaussian(e: u64) -> f64 {
    let target = std::f64::consts::FRAC_PI_2 * e as f64;
    let f = |n: f64| n * n * (1.0 + 1.0 / n.log10()) - target;
    let (mut lo, mut hi) = (2.0f64, 1.0e12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Size at which two of `n` entries share one of `e` bins with probability
/// one half (the birthday bound).
pub fn birthday_threshold(e: u64) -> f64 {
    0.5 + (0.25 + 2.0 * 2.0f64.ln() * e as f64).sqrt()
}

/// Range, precision and granular length of a Gaussian sample of size `n`,
/// through the normalized binomial approximation.
pub fn gaussian_granular_length_approx(n: u64) -> (f64, f64, f64) {
    let nf = n as f64;
    let b = nf.log2();
    let rng = 2.0 * (b + 1.0) / b.sqrt();
    let pr = std::f64::consts::PI * b.sqrt() / (nf * nf);
    let gr = (2.0 / std::f64::consts::PI) * (1.0 + 1.0 / b) * nf * nf;
    (rng, pr, gr)
}
