//! Command-line front end: build histograms, run conditioning diagnostics,
//! generate synthetic datasets and rerun the evaluation experiments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use mdlhist::conditioning;
use mdlhist::experiments::{self, ExperimentConfig, ExperimentName};
use mdlhist::io::{self, InputFormat, IoError};
use mdlhist::optimizer::{self, BuildOptions};
use mdlhist::synthlab::{self, GeneratorSpec};
use mdlhist::twolevel::{self, GlobalHistogram};

const EXIT_INPUT: i32 = 2;
const EXIT_EMPTY: i32 = 3;
const EXIT_INTERNAL: i32 = 4;

#[derive(Parser)]
#[command(name = "mdlhist", version, about = "Regularized irregular histograms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BuildMode {
    Auto,
    Standard,
    TwoLevel,
}

impl std::str::FromStr for BuildMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "standard" => Ok(Self::Standard),
            "two-level" => Ok(Self::TwoLevel),
            other => Err(format!("unknown mode '{other}', expected auto, standard or two-level")),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a histogram from a data file and write it as JSON.
    Build {
        #[arg(long)]
        input: PathBuf,
        /// Input format: values | value-freq.
        #[arg(long, default_value = "values")]
        format: InputFormat,
        /// Construction mode: auto | standard | two-level.
        #[arg(long, default_value = "auto")]
        mode: BuildMode,
        /// Stop the granularity loop early past sqrt(n).
        #[arg(long)]
        early_stop: bool,
        /// Fixed elementary bin count, bypassing the mantissa-budget rule.
        #[arg(long)]
        force_e: Option<u64>,
        /// Elementary bin budget.
        #[arg(long, default_value_t = 1_000_000_000)]
        e_max: u64,
        #[arg(long)]
        output: PathBuf,
        /// Optional CSV plot data (lower,upper,count,density).
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Write the conditioning report of a data file as JSON.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "values")]
        format: InputFormat,
        #[arg(long, default_value_t = 1_000_000_000)]
        e_max: u64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic dataset from a generator spec (JSON).
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Rerun an evaluation protocol and write per-configuration CSV.
    Experiment {
        /// one-outlier | outlier-dist | heavy-tail | scalability.
        #[arg(long)]
        name: ExperimentName,
        #[arg(long, default_value_t = 20)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest swept exponent; protocol default when omitted.
        #[arg(long)]
        max_exponent: Option<u32>,
        /// Early-stop the granularity loop of every build.
        #[arg(long)]
        early_stop: bool,
        /// Raise repetitions to the reference count (100).
        #[arg(long)]
        full: bool,
        #[arg(long)]
        output_dir: PathBuf,
    },
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    options: BTreeMap<String, String>,
    input_digest: String,
    tool_version: String,
    elapsed_seconds: f64,
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn input(message: String) -> Self {
        CliError { code: EXIT_INPUT, message }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Empty => EXIT_EMPTY,
            IoError::Data(mdlhist::dataset::DataSetError::EmptyInput) => EXIT_EMPTY,
            _ => EXIT_INPUT,
        };
        CliError { code, message: e.to_string() }
    }
}

fn digest_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(7 + 2 * digest.len());
    out.push_str("sha256:");
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn write_manifest(
    primary_output: &Path,
    command: &str,
    options: BTreeMap<String, String>,
    input_digest: String,
    elapsed_seconds: f64,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.to_string(),
        options,
        input_digest,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        elapsed_seconds,
    };
    let path = manifest_path(primary_output);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, body + "\n")
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value).expect("output serializes");
    std::fs::write(path, body + "\n")
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn write_plot_csv(path: &Path, h: &GlobalHistogram) -> Result<(), CliError> {
    let mut out = String::from("lower,upper,count,density\r\n");
    for (lower, upper, count, density) in experiments::plot_rows(h) {
        out.push_str(&format!("{lower},{upper},{count},{density}\r\n"));
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn cmd_build(
    input: &Path,
    format: InputFormat,
    mode: BuildMode,
    early_stop: bool,
    force_e: Option<u64>,
    e_max: u64,
    output: &Path,
    plot: Option<&Path>,
) -> Result<(), CliError> {
    let bytes = std::fs::read(input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::input(format!("{} is not UTF-8", input.display())))?;
    let d = match format {
        InputFormat::Values => mdlhist::DataSet::from_values(&io::parse_values(&text)?),
        InputFormat::ValueFreq => mdlhist::DataSet::from_pairs(&io::parse_value_freq(&text)?),
    }
    .map_err(IoError::Data)?;

    let opts = BuildOptions { e_max, early_stop, force_e };
    let started = Instant::now();
    let hist = match mode {
        BuildMode::Auto | BuildMode::TwoLevel => twolevel::build_two_level(&d, &opts),
        BuildMode::Standard => {
            let out = optimizer::build_standard(&d, &opts);
            twolevel::from_standard(&d, &out)
        }
    };
    let elapsed = started.elapsed().as_secs_f64();

    write_json(output, &hist)?;
    if let Some(plot_path) = plot {
        write_plot_csv(plot_path, &hist)?;
    }
    let mut options = BTreeMap::new();
    options.insert("format".into(), format_name(format).into());
    options.insert("mode".into(), mode_name(mode).into());
    options.insert("early_stop".into(), early_stop.to_string());
    options.insert("force_e".into(), force_e.map_or("none".into(), |v| v.to_string()));
    options.insert("e_max".into(), e_max.to_string());
    write_manifest(output, "build", options, digest_bytes(&bytes), elapsed)
}

fn format_name(f: InputFormat) -> &'static str {
    match f {
        InputFormat::Values => "values",
        InputFormat::ValueFreq => "value-freq",
    }
}

fn mode_name(m: BuildMode) -> &'static str {
    match m {
        BuildMode::Auto => "auto",
        BuildMode::Standard => "standard",
        BuildMode::TwoLevel => "two-level",
    }
}

fn cmd_analyze(
    input: &Path,
    format: InputFormat,
    e_max: u64,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let bytes = std::fs::read(input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", input.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::input(format!("{} is not UTF-8", input.display())))?;
    let d = match format {
        InputFormat::Values => mdlhist::DataSet::from_values(&io::parse_values(&text)?),
        InputFormat::ValueFreq => mdlhist::DataSet::from_pairs(&io::parse_value_freq(&text)?),
    }
    .map_err(IoError::Data)?;

    let started = Instant::now();
    let report = conditioning::analyze(&d, e_max);
    let elapsed = started.elapsed().as_secs_f64();

    match output {
        Some(path) => {
            write_json(path, &report)?;
            let mut options = BTreeMap::new();
            options.insert("format".into(), format_name(format).into());
            options.insert("e_max".into(), e_max.to_string());
            write_manifest(path, "analyze", options, digest_bytes(&bytes), elapsed)?;
        }
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
    }
    Ok(())
}

fn cmd_generate(spec_path: &Path, output: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(spec_path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", spec_path.display())))?;
    let spec: GeneratorSpec = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::input(format!("invalid generator spec: {e}")))?;
    let started = Instant::now();
    let d = synthlab::generate(&spec).map_err(|e| CliError::input(e.to_string()))?;
    let elapsed = started.elapsed().as_secs_f64();
    io::write_values(output, &d)?;
    let mut options = BTreeMap::new();
    options.insert("n".into(), spec.n.to_string());
    options.insert("seed".into(), spec.seed.to_string());
    options.insert("stream".into(), spec.stream.to_string());
    write_manifest(output, "generate", options, digest_bytes(&bytes), elapsed)
}

fn cmd_experiment(
    name: ExperimentName,
    reps: u64,
    seed: u64,
    max_exponent: Option<u32>,
    early_stop: bool,
    full: bool,
    output_dir: &Path,
) -> Result<(), CliError> {
    std::fs::create_dir_all(output_dir)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", output_dir.display())))?;
    let cfg = ExperimentConfig {
        reps: if full { 100 } else { reps },
        seed,
        max_exponent: max_exponent.unwrap_or_else(|| name.default_max_exponent()),
        early_stop,
    };
    let started = Instant::now();
    let rows = experiments::run_experiment(name, &cfg);
    let elapsed = started.elapsed().as_secs_f64();

    let mut csv = format!(
        "{},standard_k_mean,standard_k_std,twolevel_k_mean,twolevel_k_std,subsets_mean,subsets_std,elapsed_seconds\r\n",
        name.param_name()
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\r\n",
            r.param,
            r.standard_k_mean,
            r.standard_k_std,
            r.twolevel_k_mean,
            r.twolevel_k_std,
            r.subsets_mean,
            r.subsets_std,
            r.elapsed_seconds
        ));
    }
    let csv_path = output_dir.join(format!("{}.csv", name.csv_name()));
    std::fs::write(&csv_path, csv)
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", csv_path.display())))?;

    let mut options = BTreeMap::new();
    options.insert("name".into(), name.csv_name().into());
    options.insert("reps".into(), cfg.reps.to_string());
    options.insert("seed".into(), cfg.seed.to_string());
    options.insert("max_exponent".into(), cfg.max_exponent.to_string());
    options.insert("early_stop".into(), cfg.early_stop.to_string());
    let digest_src = format!("{}:{}:{}:{}", name.csv_name(), cfg.reps, cfg.seed, cfg.max_exponent);
    write_manifest(&csv_path, "experiment", options, digest_bytes(digest_src.as_bytes()), elapsed)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Build { input, format, mode, early_stop, force_e, e_max, output, plot } => {
            cmd_build(&input, format, mode, early_stop, force_e, e_max, &output, plot.as_deref())
        }
        Command::Analyze { input, format, e_max, output } => {
            cmd_analyze(&input, format, e_max, output.as_deref())
        }
        Command::Generate { spec, output } => cmd_generate(&spec, &output),
        Command::Experiment { name, reps, seed, max_exponent, early_stop, full, output_dir } => {
            cmd_experiment(name, reps, seed, max_exponent, early_stop, full, &output_dir)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| run(cli)));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
        Err(_) => {
            eprintln!("error: internal invariant violation");
            std::process::exit(EXIT_INTERNAL);
        }
    }
}
