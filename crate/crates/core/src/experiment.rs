//! Experiment runner: configuration, `run`, `compare` and `calibrate`.
//!
//! Configuration is a flat set of `key = value` pairs, read from an optional
//! plain-text file and then overridden by `--key value` flags. A run writes
//! into its output directory:
//!
//! | file | contents |
//! |------|----------|
//! | `report.csv` | `index,mean,variance,distinct_fraction` |
//! | `histogram_<i>.csv` | `bin_left,bin_right,count` for each requested index |
//! | `ess.csv` | `step,ess,resampled` (SIR/SIS) |
//! | `attempts.csv` | `window,mean_attempts` (WRS, full rejection) |
//! | `data.txt` | the observations, one per line |
//! | `meta.txt` | `key = value` echo of the resolved configuration |
//! | `timing.txt` | wall-clock seconds (the only non-reproducible output) |
//!
//! Calibration writes `window_plan.txt`, `calibration.csv` and
//! `calibration_attempts.csv` in place of the report files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::error::Error;
use crate::hmm::Ensemble;
use crate::models::{
    simulate, BenchmarkModel, LinearGaussian, LinearGaussianParams, Nonlinear, NonlinearParams,
    StochVolParams, StochasticVolatility, Tobit, TobitParams,
};
use crate::oracle::{kalman_smoother, z_score};
use crate::rejection::{full_trajectory_rejection, DEFAULT_MAX_ATTEMPTS};
use crate::report::{fmt_f64, parse_marginals_csv, Histogram, RunReport};
use crate::rng::{RngStream, SIMULATION_STREAM};
use crate::smc::{sir_run, ResamplePolicy};
use crate::wrs::{calibrate_window, wrs_run, CalibrationSettings, WindowPlan};

pub const DEFAULT_BINS: usize = 60;
pub const DEFAULT_COMPARE_BOUND: f64 = 4.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Sampler(#[from] Error),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl ExperimentError {
    fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        ExperimentError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }

    /// 2 for configuration and input problems, 3 for sampler failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config { .. } | ExperimentError::Io { .. } => 2,
            ExperimentError::Sampler(_) => 3,
        }
    }
}

/// Parameter-validation failures name a config field; everything else is a
/// sampler error.
fn model_error(e: Error) -> ExperimentError {
    match e {
        Error::InvalidParameter { name, reason } => ExperimentError::config(name, reason),
        other => ExperimentError::Sampler(other),
    }
}

pub type Pairs = BTreeMap<String, String>;

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Pairs, ExperimentError> {
    let mut pairs = Pairs::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            ExperimentError::config(
                "config",
                format!("line {}: expected `key = value`", lineno + 1),
            )
        })?;
        pairs.insert(normalize_key(key), value.trim().to_string());
    }
    Ok(pairs)
}

/// Splits `--key value` / `--key=value` flags from positional arguments.
/// Bare flags listed in `switches` take no value and map to `"true"`.
pub fn parse_flags(
    args: &[String],
    switches: &[&str],
) -> Result<(Pairs, Vec<String>), ExperimentError> {
    let mut pairs = Pairs::new();
    let mut positional = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            positional.push(arg.clone());
            continue;
        };
        if let Some((k, v)) = flag.split_once('=') {
            pairs.insert(normalize_key(k), v.to_string());
        } else if switches.contains(&flag) {
            pairs.insert(normalize_key(flag), "true".into());
        } else {
            let value = it.next().ok_or_else(|| {
                ExperimentError::config(normalize_key(flag), "flag is missing its value")
            })?;
            pairs.insert(normalize_key(flag), value.clone());
        }
    }
    Ok((pairs, positional))
}

/// Reads `--config` (if present) and lets the flags override it.
pub fn resolve_pairs(flags: Pairs) -> Result<Pairs, ExperimentError> {
    let mut pairs = match flags.get("config") {
        Some(path) => {
            let path = PathBuf::from(path);
            let text = fs::read_to_string(&path).map_err(|e| ExperimentError::io(&path, e))?;
            parse_config_text(&text)?
        }
        None => Pairs::new(),
    };
    pairs.extend(flags);
    pairs.remove("config");
    Ok(pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Wrs,
    Sir,
    Sis,
    FullRejection,
    Calibrate,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Wrs => "wrs",
            Algorithm::Sir => "sir",
            Algorithm::Sis => "sis",
            Algorithm::FullRejection => "full-rejection",
            Algorithm::Calibrate => "calibrate",
        }
    }

    fn parse(s: &str) -> Result<Self, ExperimentError> {
        Ok(match s {
            "wrs" => Algorithm::Wrs,
            "sir" => Algorithm::Sir,
            "sis" => Algorithm::Sis,
            "full-rejection" | "full_rejection" | "rejection" => Algorithm::FullRejection,
            "calibrate" => Algorithm::Calibrate,
            other => {
                return Err(ExperimentError::config(
                    "algo",
                    format!("unknown algorithm `{other}` (expected wrs, sir, sis, full-rejection, calibrate)"),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelConfig {
    LinearGaussian(LinearGaussianParams),
    StochasticVolatility(StochVolParams),
    Nonlinear(NonlinearParams),
    Tobit(TobitParams),
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::LinearGaussian(_) => "lg",
            ModelConfig::StochasticVolatility(_) => "sv",
            ModelConfig::Nonlinear(_) => "nl",
            ModelConfig::Tobit(_) => "tobit",
        }
    }

    pub fn build(&self) -> Result<BenchmarkModel, Error> {
        Ok(match *self {
            ModelConfig::LinearGaussian(p) => LinearGaussian::new(p)?.into(),
            ModelConfig::StochasticVolatility(p) => StochasticVolatility::new(p)?.into(),
            ModelConfig::Nonlinear(p) => Nonlinear::new(p)?.into(),
            ModelConfig::Tobit(p) => Tobit::new(p)?.into(),
        })
    }

    fn param_keys(name: &str) -> Option<&'static [&'static str]> {
        Some(match name {
            "lg" => &["mu0", "sigma0", "a", "b", "sigma_x", "sigma_y"],
            "sv" => &["alpha", "sigma", "beta"],
            "nl" => &["mu", "sigma2", "sigma_x2", "sigma_y2"],
            "tobit" => &["phi", "sigma_x2", "sigma_y2"],
            _ => return None,
        })
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            ModelConfig::LinearGaussian(p) => vec![
                ("mu0", p.mu0),
                ("sigma0", p.sigma0),
                ("a", p.a),
                ("b", p.b),
                ("sigma_x", p.sigma_x),
                ("sigma_y", p.sigma_y),
            ],
            ModelConfig::StochasticVolatility(p) => {
                vec![("alpha", p.alpha), ("sigma", p.sigma), ("beta", p.beta)]
            }
            ModelConfig::Nonlinear(p) => vec![
                ("mu", p.mu),
                ("sigma2", p.sigma2),
                ("sigma_x2", p.sigma_x2),
                ("sigma_y2", p.sigma_y2),
            ],
            ModelConfig::Tobit(p) => vec![
                ("phi", p.phi),
                ("sigma_x2", p.sigma_x2),
                ("sigma_y2", p.sigma_y2),
            ],
        }
    }

    fn from_pairs(name: &str, pairs: &Pairs) -> Result<Self, ExperimentError> {
        let get = |key: &'static str, default: f64| -> Result<f64, ExperimentError> {
            match pairs.get(key) {
                Some(v) => parse_value(key, v),
                None => Ok(default),
            }
        };
        let config = match name {
            "lg" => {
                let d = LinearGaussianParams::default();
                ModelConfig::LinearGaussian(LinearGaussianParams {
                    mu0: get("mu0", d.mu0)?,
                    sigma0: get("sigma0", d.sigma0)?,
                    a: get("a", d.a)?,
                    b: get("b", d.b)?,
                    sigma_x: get("sigma_x", d.sigma_x)?,
                    sigma_y: get("sigma_y", d.sigma_y)?,
                })
            }
            "sv" => {
                let d = StochVolParams::default();
                ModelConfig::StochasticVolatility(StochVolParams {
                    alpha: get("alpha", d.alpha)?,
                    sigma: get("sigma", d.sigma)?,
                    beta: get("beta", d.beta)?,
                })
            }
            "nl" => {
                let d = NonlinearParams::default();
                ModelConfig::Nonlinear(NonlinearParams {
                    mu: get("mu", d.mu)?,
                    sigma2: get("sigma2", d.sigma2)?,
                    sigma_x2: get("sigma_x2", d.sigma_x2)?,
                    sigma_y2: get("sigma_y2", d.sigma_y2)?,
                })
            }
            "tobit" => {
                let d = TobitParams::default();
                ModelConfig::Tobit(TobitParams {
                    phi: get("phi", d.phi)?,
                    sigma_x2: get("sigma_x2", d.sigma_x2)?,
                    sigma_y2: get("sigma_y2", d.sigma_y2)?,
                })
            }
            other => {
                return Err(ExperimentError::config(
                    "model",
                    format!("unknown model `{other}` (expected lg, sv, nl, tobit)"),
                ))
            }
        };
        config.build().map_err(model_error)?;
        Ok(config)
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ExperimentError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| ExperimentError::config(key, format!("cannot parse `{value}`: {e}")))
}

const RUN_KEYS: &[&str] = &[
    "model",
    "algo",
    "n",
    "N",
    "w",
    "policy",
    "threshold",
    "seed",
    "data_seed",
    "data",
    "out",
    "hist",
    "bins",
    "max_attempts",
    "threads",
    "w_max",
    "z_bound",
];

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub algorithm: Algorithm,
    /// Number of observations.
    pub n: usize,
    pub n_particles: usize,
    pub w: Option<usize>,
    pub policy: ResamplePolicy,
    pub seed: u64,
    /// Seed for simulating the observations (defaults to `seed`).
    pub data_seed: u64,
    /// Observations file; when absent data are simulated.
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub histogram_indices: Vec<usize>,
    pub bins: usize,
    pub max_attempts: u64,
    pub threads: Option<usize>,
    pub w_max: usize,
    pub z_bound: f64,
}

impl ExperimentConfig {
    pub fn from_pairs(pairs: &Pairs) -> Result<Self, ExperimentError> {
        let model_name = pairs
            .get("model")
            .ok_or_else(|| ExperimentError::config("model", "missing required field"))?;
        let model_keys = ModelConfig::param_keys(model_name).unwrap_or(&[]);
        if let Some(unknown) = pairs
            .keys()
            .find(|k| !RUN_KEYS.contains(&k.as_str()) && !model_keys.contains(&k.as_str()))
        {
            return Err(ExperimentError::config(
                unknown.clone(),
                format!("unknown key for model `{model_name}`"),
            ));
        }
        let model = ModelConfig::from_pairs(model_name, pairs)?;
        let algorithm = Algorithm::parse(
            pairs
                .get("algo")
                .ok_or_else(|| ExperimentError::config("algo", "missing required field"))?,
        )?;

        let data = pairs.get("data").map(PathBuf::from);
        let n = match pairs.get("n") {
            Some(v) => parse_value::<usize>("n", v)?,
            None if data.is_some() => 0,
            None => return Err(ExperimentError::config("n", "missing required field")),
        };
        if data.is_none() && n < 1 {
            return Err(ExperimentError::config("n", "must be at least 1"));
        }
        let n_particles: usize = parse_value(
            "N",
            pairs
                .get("N")
                .ok_or_else(|| ExperimentError::config("N", "missing required field"))?,
        )?;
        if n_particles < 1 {
            return Err(ExperimentError::config("N", "must be at least 1"));
        }
        let w = pairs
            .get("w")
            .map(|v| parse_value::<usize>("w", v))
            .transpose()?;
        if algorithm == Algorithm::Wrs {
            match w {
                None => return Err(ExperimentError::config("w", "required for algo wrs")),
                Some(0) => return Err(ExperimentError::config("w", "must be at least 1")),
                _ => {}
            }
        }
        let threshold = pairs
            .get("threshold")
            .map(|v| parse_value::<f64>("threshold", v))
            .transpose()?;
        let policy = match pairs.get("policy").map(String::as_str) {
            None | Some("ess") => ResamplePolicy::EssBelow(threshold.unwrap_or(1.0 / 3.0)),
            Some("never") => ResamplePolicy::Never,
            Some("always") => ResamplePolicy::Always,
            Some(other) => {
                return Err(ExperimentError::config(
                    "policy",
                    format!("unknown policy `{other}` (expected never, always, ess)"),
                ))
            }
        };
        if threshold.is_some() && !matches!(policy, ResamplePolicy::EssBelow(_)) {
            return Err(ExperimentError::config(
                "threshold",
                "only valid with policy ess",
            ));
        }
        policy
            .validate()
            .map_err(|e| ExperimentError::config("threshold", e.to_string()))?;

        let seed = pairs
            .get("seed")
            .map(|v| parse_value("seed", v))
            .transpose()?
            .unwrap_or(0);
        let data_seed = pairs
            .get("data_seed")
            .map(|v| parse_value("data_seed", v))
            .transpose()?
            .unwrap_or(seed);
        let out = PathBuf::from(
            pairs
                .get("out")
                .ok_or_else(|| ExperimentError::config("out", "missing required field"))?,
        );
        let histogram_indices = match pairs.get("hist") {
            Some(list) if !list.trim().is_empty() => list
                .split(',')
                .map(|s| parse_value::<usize>("hist", s))
                .collect::<Result<Vec<_>, _>>()?,
            _ => Vec::new(),
        };
        let bins = pairs
            .get("bins")
            .map(|v| parse_value("bins", v))
            .transpose()?
            .unwrap_or(DEFAULT_BINS);
        if bins == 0 {
            return Err(ExperimentError::config("bins", "must be at least 1"));
        }
        let max_attempts = pairs
            .get("max_attempts")
            .map(|v| parse_value("max_attempts", v))
            .transpose()?
            .unwrap_or(DEFAULT_MAX_ATTEMPTS);
        if max_attempts == 0 {
            return Err(ExperimentError::config(
                "max_attempts",
                "must be at least 1",
            ));
        }
        let threads = pairs
            .get("threads")
            .map(|v| parse_value::<usize>("threads", v))
            .transpose()?;
        if threads == Some(0) {
            return Err(ExperimentError::config("threads", "must be at least 1"));
        }
        let defaults = CalibrationSettings::default();
        let w_max = pairs
            .get("w_max")
            .map(|v| parse_value("w_max", v))
            .transpose()?
            .unwrap_or(defaults.w_max);
        if w_max == 0 {
            return Err(ExperimentError::config("w_max", "must be at least 1"));
        }
        let z_bound = pairs
            .get("z_bound")
            .map(|v| parse_value("z_bound", v))
            .transpose()?
            .unwrap_or(defaults.z_bound);

        let config = Self {
            model,
            algorithm,
            n,
            n_particles,
            w,
            policy,
            seed,
            data_seed,
            data,
            out,
            histogram_indices,
            bins,
            max_attempts,
            threads,
            w_max,
            z_bound,
        };
        if config.data.is_none() {
            config.check_histogram_indices(n)?;
        }
        Ok(config)
    }

    fn check_histogram_indices(&self, n: usize) -> Result<(), ExperimentError> {
        if let Some(&bad) = self.histogram_indices.iter().find(|&&i| i > n) {
            return Err(ExperimentError::config(
                "hist",
                format!("index {bad} beyond the last state index {n}"),
            ));
        }
        Ok(())
    }

    /// Deterministic `key = value` echo; excludes the output path and thread count.
    pub fn meta_lines(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "version = {} {}",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        );
        let _ = writeln!(out, "model = {}", self.model.name());
        for (k, v) in self.model.params() {
            let _ = writeln!(out, "{k} = {}", fmt_f64(v));
        }
        let _ = writeln!(out, "algo = {}", self.algorithm.name());
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "N = {}", self.n_particles);
        if let Some(w) = self.w {
            let _ = writeln!(out, "w = {w}");
        }
        match self.policy {
            ResamplePolicy::Never => {
                let _ = writeln!(out, "policy = never");
            }
            ResamplePolicy::Always => {
                let _ = writeln!(out, "policy = always");
            }
            ResamplePolicy::EssBelow(f) => {
                let _ = writeln!(out, "policy = ess\nthreshold = {}", fmt_f64(f));
            }
        }
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "data_seed = {}", self.data_seed);
        if let Some(d) = &self.data {
            let _ = writeln!(out, "data = {}", d.display());
        }
        let hist: Vec<String> = self
            .histogram_indices
            .iter()
            .map(usize::to_string)
            .collect();
        let _ = writeln!(out, "hist = {}", hist.join(","));
        let _ = writeln!(out, "bins = {}", self.bins);
        let _ = writeln!(out, "max_attempts = {}", self.max_attempts);
        if self.algorithm == Algorithm::Calibrate {
            let _ = writeln!(
                out,
                "w_max = {}\nz_bound = {}",
                self.w_max,
                fmt_f64(self.z_bound)
            );
        }
        out
    }
}

/// Reads one observation per line (blank lines ignored).
pub fn read_observations(path: &Path) -> Result<Vec<f64>, ExperimentError> {
    let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| ExperimentError::config("data", format!("line {}: {e}", k + 1)))
        })
        .collect()
}

pub fn observations_text(y: &[f64]) -> String {
    let mut out = String::new();
    for v in y {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), ExperimentError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| ExperimentError::io(&path, e))
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub observations: Vec<f64>,
    pub report: Option<RunReport>,
    pub plan: Option<WindowPlan>,
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, ExperimentError> + Send,
) -> Result<T, ExperimentError> {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| ExperimentError::config("threads", e.to_string()))?
            .install(f),
    }
}

/// Executes one experiment and writes its outputs.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, ExperimentError> {
    let mut config = config.clone();
    let model = config.model.build().map_err(model_error)?;
    let y = match &config.data {
        Some(path) => {
            let y = read_observations(path)?;
            if y.is_empty() {
                return Err(ExperimentError::config(
                    "data",
                    "file holds no observations",
                ));
            }
            if config.n != 0 && config.n != y.len() {
                return Err(ExperimentError::config(
                    "n",
                    format!(
                        "n = {} but the data file holds {} observations",
                        config.n,
                        y.len()
                    ),
                ));
            }
            config.n = y.len();
            config.check_histogram_indices(y.len())?;
            y
        }
        None => {
            let mut rng = RngStream::new(config.data_seed, SIMULATION_STREAM);
            simulate(&model, config.n, &mut rng)?.1
        }
    };
    fs::create_dir_all(&config.out).map_err(|e| ExperimentError::io(&config.out, e))?;
    let out = config.out.clone();
    let mut meta = config.meta_lines();

    let started = Instant::now();
    let outcome = with_threads(config.threads, || execute(&config, &model, &y))?;
    let elapsed = started.elapsed().as_secs_f64();

    write_file(&out, "data.txt", &observations_text(&y))?;
    let summary = match outcome {
        Outcome::Ensemble(ensemble, mut report) => {
            report.wall_clock_seconds = elapsed;
            let _ = writeln!(meta, "effective_n = {}", fmt_f64(report.effective_size));
            write_file(&out, "report.csv", &report.marginals_csv())?;
            if !report.ess_trace.is_empty() {
                write_file(&out, "ess.csv", &report.ess_csv())?;
            }
            if !report.mean_attempts.is_empty() {
                write_file(&out, "attempts.csv", &report.attempts_csv())?;
            }
            for &i in &config.histogram_indices {
                let h = Histogram::of_marginal(&ensemble, i, config.bins)?;
                write_file(&out, &format!("histogram_{i}.csv"), &h.to_csv())?;
            }
            RunSummary {
                observations: y,
                report: Some(report),
                plan: None,
            }
        }
        Outcome::Plan(plan) => {
            write_calibration(&out, &plan, &mut meta)?;
            RunSummary {
                observations: y,
                report: None,
                plan: Some(plan),
            }
        }
    };
    write_file(&out, "meta.txt", &meta)?;
    write_file(
        &out,
        "timing.txt",
        &format!("wall_clock_seconds = {elapsed:.6}\n"),
    )?;
    Ok(summary)
}

enum Outcome {
    Ensemble(Ensemble, RunReport),
    Plan(WindowPlan),
}

fn execute(
    config: &ExperimentConfig,
    model: &BenchmarkModel,
    y: &[f64],
) -> Result<Outcome, ExperimentError> {
    let seed = config.seed;
    let n_particles = config.n_particles;
    Ok(match config.algorithm {
        Algorithm::Wrs => {
            let w = config.w.expect("validated");
            let run = wrs_run(model, y, w, n_particles, seed, config.max_attempts)?;
            let mut report = RunReport::from_ensemble(&run.ensemble, seed)?;
            report.mean_attempts = run.mean_attempts;
            Outcome::Ensemble(run.ensemble, report)
        }
        Algorithm::FullRejection => {
            let run = full_trajectory_rejection(model, y, n_particles, seed, config.max_attempts)?;
            let mut report = RunReport::from_ensemble(&run.ensemble, seed)?;
            report.mean_attempts = run.mean_attempts;
            Outcome::Ensemble(run.ensemble, report)
        }
        Algorithm::Sir | Algorithm::Sis => {
            let policy = if config.algorithm == Algorithm::Sis {
                ResamplePolicy::Never
            } else {
                config.policy
            };
            let run = sir_run(model, y, n_particles, policy, seed)?;
            let mut report = RunReport::from_ensemble(&run.ensemble, seed)?;
            report.ess_trace = run.ess_trace;
            report.resample_steps = run.resample_steps;
            Outcome::Ensemble(run.ensemble, report)
        }
        Algorithm::Calibrate => {
            let reference =
                full_trajectory_rejection(model, y, n_particles, seed, config.max_attempts)?;
            let settings = CalibrationSettings {
                n_particles,
                w_max: config.w_max,
                z_bound: config.z_bound,
                seed,
                max_attempts: config.max_attempts,
            };
            Outcome::Plan(calibrate_window(model, y, &reference.ensemble, &settings)?)
        }
    })
}

fn write_calibration(
    out: &Path,
    plan: &WindowPlan,
    meta: &mut String,
) -> Result<(), ExperimentError> {
    let _ = writeln!(meta, "calibrated_w = {}", plan.w);
    let mut plan_txt = format!("w = {}\n", plan.w);
    let mut table = String::from("w,index,wrs_mean,wrs_sd,reference_mean,z\n");
    let mut attempts = String::from("w,window,mean_attempts\n");
    if let Some(cal) = &plan.calibration {
        for c in &cal.candidates {
            match &c.infeasible {
                Some(e) => {
                    let _ = writeln!(plan_txt, "max_abs_z[w={}] = inf ({e})", c.w);
                }
                None => {
                    let (index, z) = c.worst();
                    let _ = writeln!(
                        plan_txt,
                        "max_abs_z[w={}] = {} at index {index}",
                        c.w,
                        fmt_f64(z.abs())
                    );
                }
            }
            for i in 0..c.means.len() {
                let _ = writeln!(
                    table,
                    "{},{i},{},{},{},{}",
                    c.w,
                    fmt_f64(c.means[i]),
                    fmt_f64(c.sds[i]),
                    fmt_f64(cal.reference_means[i]),
                    fmt_f64(c.z_scores[i])
                );
            }
            for (m, a) in c.mean_attempts.iter().enumerate() {
                let _ = writeln!(attempts, "{},{m},{}", c.w, fmt_f64(*a));
            }
        }
    }
    write_file(out, "window_plan.txt", &plan_txt)?;
    write_file(out, "calibration.csv", &table)?;
    write_file(out, "calibration_attempts.csv", &attempts)
}

/// Marginal table plus metadata of a finished run directory.
#[derive(Debug, Clone)]
pub struct RunDirectory {
    pub dir: PathBuf,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub effective_n: f64,
    pub meta: Pairs,
}

impl RunDirectory {
    /// Loads a run from its directory (or from a `report.csv` inside it).
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let dir = if path.is_file() {
            path.parent().map(Path::to_path_buf).unwrap_or_default()
        } else {
            path.to_path_buf()
        };
        let report_path = dir.join("report.csv");
        let report_text =
            fs::read_to_string(&report_path).map_err(|e| ExperimentError::io(&report_path, e))?;
        let table =
            parse_marginals_csv(&report_text).map_err(|m| ExperimentError::config("report", m))?;
        let meta_path = dir.join("meta.txt");
        let meta_text =
            fs::read_to_string(&meta_path).map_err(|e| ExperimentError::io(&meta_path, e))?;
        let meta = parse_config_text(&meta_text)?;
        let effective_n = meta
            .get("effective_n")
            .ok_or_else(|| {
                ExperimentError::config(
                    "effective_n",
                    format!("missing from {}", meta_path.display()),
                )
            })
            .and_then(|v| parse_value::<f64>("effective_n", v))?;
        Ok(Self {
            dir,
            means: table.means,
            variances: table.variances,
            effective_n,
            meta,
        })
    }

    /// Exact smoothing means for a linear-Gaussian run, from its echoed
    /// parameters and `data.txt`.
    pub fn kalman_means(&self) -> Result<Vec<f64>, ExperimentError> {
        if self.meta.get("model").map(String::as_str) != Some("lg") {
            return Err(ExperimentError::config(
                "oracle",
                "the exact oracle exists only for the lg model",
            ));
        }
        let mut pairs = self.meta.clone();
        pairs.retain(|k, _| ModelConfig::param_keys("lg").unwrap().contains(&k.as_str()));
        let ModelConfig::LinearGaussian(p) = ModelConfig::from_pairs("lg", &pairs)? else {
            unreachable!()
        };
        let y = read_observations(&self.dir.join("data.txt"))?;
        Ok(kalman_smoother(&p, &y).means)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub mean_a: f64,
    pub mean_b: f64,
    pub standard_error: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub bound: f64,
}

impl Comparison {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_abs_z() <= self.bound
    }

    /// `index,mean_a,mean_b,standard_error,z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,mean_a,mean_b,standard_error,z\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{}",
                fmt_f64(r.mean_a),
                fmt_f64(r.mean_b),
                fmt_f64(r.standard_error),
                fmt_f64(r.z)
            );
        }
        out
    }
}

/// The other side of a comparison.
#[derive(Debug, Clone)]
pub enum CompareTarget {
    Run(PathBuf),
    /// Exact Kalman smoother means (lg runs only).
    Oracle,
}

/// Per-index z-scores between two runs, or between a run and the exact oracle.
pub fn compare(
    a: &Path,
    target: &CompareTarget,
    bound: f64,
) -> Result<Comparison, ExperimentError> {
    let run_a = RunDirectory::load(a)?;
    let (means_b, se2_b): (Vec<f64>, Vec<f64>) = match target {
        CompareTarget::Run(b) => {
            let run_b = RunDirectory::load(b)?;
            let se2 = run_b
                .variances
                .iter()
                .map(|v| v / run_b.effective_n)
                .collect();
            (run_b.means, se2)
        }
        CompareTarget::Oracle => {
            let means = run_a.kalman_means()?;
            let zeros = vec![0.0; means.len()];
            (means, zeros)
        }
    };
    if means_b.len() != run_a.means.len() {
        return Err(ExperimentError::config(
            "n",
            format!(
                "reports cover {} and {} indices",
                run_a.means.len(),
                means_b.len()
            ),
        ));
    }
    let rows = (0..means_b.len())
        .map(|i| {
            let se = (run_a.variances[i] / run_a.effective_n + se2_b[i]).sqrt();
            ComparisonRow {
                mean_a: run_a.means[i],
                mean_b: means_b[i],
                standard_error: se,
                z: z_score(run_a.means[i] - means_b[i], se),
            }
        })
        .collect();
    Ok(Comparison { rows, bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn config(s: &str) -> Result<ExperimentConfig, ExperimentError> {
        let (pairs, _) = parse_flags(&args(s), &[])?;
        ExperimentConfig::from_pairs(&resolve_pairs(pairs)?)
    }

    #[test]
    fn flags_and_values() {
        let (pairs, pos) = parse_flags(
            &args("run --model lg --N=10 --max-attempts 5 extra"),
            &["oracle"],
        )
        .unwrap();
        assert_eq!(pos, vec!["run", "extra"]);
        assert_eq!(pairs["model"], "lg");
        assert_eq!(pairs["N"], "10");
        assert_eq!(pairs["max_attempts"], "5");
        let (pairs, _) = parse_flags(&args("--oracle --bound 3"), &["oracle"]).unwrap();
        assert_eq!(pairs["oracle"], "true");
        assert!(parse_flags(&args("--model"), &[]).is_err());
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        fs::write(
            &path,
            "# experiment\nmodel = lg\nalgo = wrs\nw = 2\nn = 5\nN = 100\nout = x\n",
        )
        .unwrap();
        let c = config(&format!("--config {} --w 4", path.display())).unwrap();
        assert_eq!(c.w, Some(4));
        assert_eq!(c.n, 5);
    }

    #[test]
    fn wrs_requires_w() {
        let err = config("--model lg --algo wrs --n 3 --N 10 --out x").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`w`"), "{err}");
    }

    #[test]
    fn invalid_fields_are_named() {
        for (flags, field) in [
            ("--model lg --algo sir --n 3 --N 0 --out x", "N"),
            ("--model lg --algo sir --n 0 --N 5 --out x", "n"),
            (
                "--model lg --algo sir --n 3 --N 5 --out x --sigma_y -1",
                "sigma_y",
            ),
            (
                "--model sv --algo sir --n 3 --N 5 --out x --alpha 1.5",
                "alpha",
            ),
            (
                "--model lg --algo sir --n 3 --N 5 --out x --alpha 0.5",
                "alpha",
            ),
            ("--model lg --algo magic --n 3 --N 5 --out x", "algo"),
            ("--model ar --algo sir --n 3 --N 5 --out x", "model"),
            (
                "--model lg --algo sir --n 3 --N 5 --out x --policy ess --threshold 2",
                "threshold",
            ),
            ("--model lg --algo sir --n 3 --N 5 --out x --hist 4", "hist"),
            ("--model lg --algo sir --n 3 --N 5", "out"),
        ] {
            match config(flags) {
                Err(ExperimentError::Config { field: f, .. }) => assert_eq!(f, field, "{flags}"),
                other => panic!("{flags}: expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn meta_echo_excludes_out_and_threads() {
        let a = config("--model tobit --algo sir --n 3 --N 5 --out a --threads 1").unwrap();
        let b = config("--model tobit --algo sir --n 3 --N 5 --out b --threads 4").unwrap();
        assert_eq!(a.meta_lines(), b.meta_lines());
        let meta = parse_config_text(&a.meta_lines()).unwrap();
        assert_eq!(meta["phi"].parse::<f64>().unwrap(), 0.99);
    }

    #[test]
    fn observations_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.txt");
        let y = vec![0.1, -2.5, 1e-300, 3.0];
        fs::write(&path, observations_text(&y)).unwrap();
        assert_eq!(read_observations(&path).unwrap(), y);
        fs::write(&path, "1.0\nnope\n").unwrap();
        assert!(read_observations(&path).is_err());
    }
}
