//! The `mcde` command line tool.
//!
//! Exit codes: `0` success, `1` runtime or data error, `2` usage or
//! configuration error. Every output file is canonical JSON (sorted keys,
//! 17 significant digits), so a fixed command and seed give identical bytes.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bench::{run_de_experiment, run_outlier_experiment, DEExperimentConfig, OutlierExperimentConfig};
use crate::error::Error;
use crate::estimator::{fit_mcde, fit_whitened, DensityModel, FitConfig, InterpolationChoice, ModelFile, Variant};
use crate::io::{load_csv, load_labels, to_canonical_json};
use crate::kernels::Kernel;
use crate::outlier::OutlierDetector;
use crate::preprocess::{reflect_boundary, transform_variable, VariableTransform};
use crate::sample::Sample;
use crate::bandwidth::Optimizer;

#[derive(Debug, Parser)]
#[command(name = "mcde", version, about = "Markov chain density estimation and outlier scoring")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select a bandwidth, fit, and save the model as JSON.
    Fit(FitArgs),
    /// Evaluate a saved model at query points.
    Eval(EvalArgs),
    /// Local density-ratio outlier scores, with AUC when labels are given.
    Score(ScoreArgs),
    /// Estimation error against KDE on a known density.
    BenchDe(BenchArgs),
    /// AUC over synthetic labeled datasets.
    BenchOutlier(BenchArgs),
}

fn parse_serde<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

/// Fit settings. Flags override values from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct FitOptions {
    /// JSON fit configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = |s: &str| s.parse::<Kernel>().map_err(|e| e.to_string()))]
    pub kernel: Option<Kernel>,
    /// Movement bias in [0, 1].
    #[arg(long)]
    pub b: Option<f64>,
    /// f1 or f2.
    #[arg(long, value_parser = parse_serde::<Variant>)]
    pub variant: Option<Variant>,
    /// auto, linear, or nearest.
    #[arg(long, value_parser = parse_serde::<InterpolationChoice>)]
    pub interpolation: Option<InterpolationChoice>,
    /// nll, loo, or kde-cv.
    #[arg(long, value_parser = |s: &str| s.parse::<Optimizer>().map_err(|e| e.to_string()))]
    pub optimizer: Option<Optimizer>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_count: Option<usize>,
    #[arg(long, env = "MCDE_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
}

impl FitOptions {
    pub fn resolve(&self) -> Result<FitConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => read_json::<FitConfig>(p)?,
            None => FitConfig::default(),
        };
        if let Some(k) = self.kernel {
            c.kernel = k;
        }
        if let Some(b) = self.b {
            c.b = b;
        }
        if let Some(v) = self.variant {
            c.variant = v;
        }
        if let Some(i) = self.interpolation {
            c.interpolation = i;
        }
        if let Some(o) = self.optimizer {
            c.optimizer = o;
        }
        if let Some(f) = self.folds {
            c.folds = f;
        }
        if let Some(v) = self.grid_min {
            c.h_grid.min = v;
        }
        if let Some(v) = self.grid_max {
            c.h_grid.max = v;
        }
        if let Some(v) = self.grid_count {
            c.h_grid.count = v;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if self.mc_samples.is_some() {
            c.mc_samples = self.mc_samples;
        }
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Args)]
pub struct WhitenFlag {
    /// Whiten before fitting (default).
    #[arg(long, overrides_with = "no_whiten")]
    pub whiten: bool,
    #[arg(long)]
    pub no_whiten: bool,
}

impl WhitenFlag {
    pub fn enabled(&self) -> bool {
        !self.no_whiten
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV of sample points, one per row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitOptions,
    #[command(flatten)]
    pub whiten: WhitenFlag,
    /// Mirror a 1-D sample across this lower boundary before fitting.
    #[arg(long)]
    pub reflect: Option<f64>,
    /// Fit a 1-D sample after `log` or `logit`.
    #[arg(long, value_parser = |s: &str| s.parse::<VariableTransform>().map_err(|e| e.to_string()))]
    pub transform: Option<VariableTransform>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model JSON written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of query points.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// One 0/1 per row; 1 marks an outlier.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitOptions,
    #[command(flatten)]
    pub whiten: WhitenFlag,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-realization CSV dump (`bench-de` only).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Overrides the seed in the experiment file.
    #[arg(long, env = "MCDE_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Preprocessing applied before the fit; replayed on queries by `eval`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub reflect: Option<f64>,
    pub transform: Option<VariableTransform>,
    pub whiten: bool,
}

/// The JSON written by `fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub kernel: Kernel,
    pub b: f64,
    pub config: FitConfig,
    pub preprocess: Preprocess,
    #[serde(flatten)]
    pub model: ModelFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    /// Normalized density in the coordinates the model was fitted on, before
    /// whitening (whitening Jacobian applied).
    pub density: Vec<f64>,
    /// Unnormalized extension in whitened coordinates.
    pub unnormalized: Vec<f64>,
    pub normalization_constant: f64,
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("no such file: {}", path.display())))
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = to_canonical_json(value)?;
    std::fs::write(path, text).map_err(Error::from)?;
    Ok(())
}

fn usage_kind(e: Error) -> CliError {
    match e {
        Error::KOutOfRange { .. } | Error::InvalidParams(_) => CliError::Usage(e.to_string()),
        e => CliError::Runtime(e),
    }
}

fn preprocess(sample: &Sample, p: &Preprocess) -> Result<Sample, Error> {
    let mut s = sample.clone();
    if let Some(t) = p.transform {
        s = transform_variable(&s, t)?;
    }
    if let Some(l) = p.reflect {
        s = reflect_boundary(&s, l)?;
    }
    Ok(s)
}

fn run_fit(args: &FitArgs) -> Result<(), CliError> {
    require_file(&args.input)?;
    let config = args.fit.resolve()?;
    let raw = load_csv(&args.input)?;
    let pre = Preprocess {
        reflect: args.reflect,
        transform: args.transform,
        whiten: args.whiten.enabled(),
    };
    let sample = preprocess(&raw, &pre)?;
    let model = if pre.whiten {
        fit_whitened(&sample, &config)?
    } else {
        fit_mcde(&sample, &config)?
    };
    log::info!(
        "h* = {}, C = {}, {} of {} grid points failed",
        model.h_star,
        model.normalization_constant,
        model.loss_curve.as_ref().map_or(0, |c| c.failed()),
        config.h_grid.count
    );
    let saved = SavedModel {
        kernel: config.kernel,
        b: config.b,
        config,
        preprocess: pre,
        model: model.to_file(),
    };
    write_json(&args.out, &saved)
}

/// Evaluates a saved model at `queries` given in the coordinates of the
/// original input (transform and whitening are replayed).
pub fn evaluate_saved(saved: &SavedModel, queries: &Sample) -> Result<EvalOutput, Error> {
    let model = DensityModel::from_file(saved.model.clone())?;
    let queries = match saved.preprocess.transform {
        Some(t) => transform_variable(queries, t)?,
        None => queries.clone(),
    };
    let expected = saved.model.anchors.dim();
    if queries.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: queries.dim(),
        });
    }
    let mut density = Vec::with_capacity(queries.len());
    let mut unnormalized = Vec::with_capacity(queries.len());
    for x in queries.rows() {
        let y = match &model.whitening {
            Some(t) => t.apply(x),
            None => x.to_vec(),
        };
        unnormalized.push(model.unnormalized(&y));
        density.push(model.density_raw(x));
    }
    Ok(EvalOutput {
        density,
        unnormalized,
        normalization_constant: model.normalization_constant,
    })
}

fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    require_file(&args.input)?;
    let saved: SavedModel = read_json(&args.model)?;
    let queries = load_csv(&args.input)?;
    write_json(&args.out, &evaluate_saved(&saved, &queries)?)
}

fn run_score(args: &ScoreArgs) -> Result<(), CliError> {
    require_file(&args.input)?;
    if let Some(l) = &args.labels {
        require_file(l)?;
    }
    let config = args.fit.resolve()?;
    let sample = load_csv(&args.input)?;
    let labels = match &args.labels {
        Some(p) => Some(load_labels(p, sample.len())?),
        None => None,
    };
    if args.k == 0 || args.k >= sample.len() {
        return Err(usage_kind(Error::KOutOfRange {
            k: args.k,
            max: sample.len().saturating_sub(1),
        }));
    }
    let detector = OutlierDetector::fit(&sample, &config, args.whiten.enabled())?;
    let report = detector.report(args.k, labels.as_deref())?;
    write_json(&args.out, &report)
}

fn run_bench_de(args: &BenchArgs) -> Result<(), CliError> {
    let mut config: DEExperimentConfig = read_json(&args.config)?;
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    let report = run_de_experiment(&config).map_err(usage_kind)?;
    for f in &report.failures {
        log::warn!("cell D={} N={} failed: {}", f.dim, f.n, f.error);
    }
    write_json(&args.out, &report)?;
    if let Some(p) = &args.csv {
        std::fs::write(p, report.to_csv()).map_err(Error::from)?;
    }
    Ok(())
}

fn run_bench_outlier(args: &BenchArgs) -> Result<(), CliError> {
    let mut config: OutlierExperimentConfig = read_json(&args.config)?;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.fit.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = run_outlier_experiment(&config).map_err(usage_kind)?;
    write_json(&args.out, &report)
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        // Fails only if a pool already exists, e.g. on a second call in-process.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized");
        }
    }
    match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::Eval(a) => run_eval(a),
        Command::Score(a) => run_score(a),
        Command::BenchDe(a) => run_bench_de(a),
        Command::BenchOutlier(a) => run_bench_outlier(a),
    }
}

/// Parses `args`, runs, prints diagnostics to standard error, and returns
/// the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
