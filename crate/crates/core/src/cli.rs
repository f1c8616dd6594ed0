//! Experiment runner: resolves presets, config files and flags, runs seeded
//! repeats and writes per-iteration, summary and figure-data files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::{Deserialize, Serialize};

use crate::chees::{AdamConfig, CheesConfig};
use crate::diagnostics::{
    classification_report, mean_summary, summarize_run, ClassificationReport, IterationDiagnostics,
    RunSummary,
};
use crate::error::{Error, Result};
use crate::nuts::DEFAULT_MAX_DEPTH;
use crate::quasirandom::{generate_jitter, JitterScheme};
use crate::smc::{run_smc, Proposal, SmcConfig, SmcRun};
use crate::targets::{
    banana_target, gaussian_target, ill_conditioned_target, load_german_credit, logistic_target,
    GermanCreditDataset, Target,
};

pub const DATASET_ENV: &str = "GERMAN_CREDIT_PATH";
/// Seed of the fixed 80/20 German-credit train/test split.
pub const SPLIT_SEED: u64 = 20_240_501;
pub const TRAIN_FRACTION: f64 = 0.8;
/// Iterations of particle positions kept for the banana scatter data.
pub const SAMPLE_TAIL: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Gaussian,
    IllGauss,
    Banana,
    GermanCredit,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Gaussian => "gaussian",
            TargetKind::IllGauss => "ill-gauss",
            TargetKind::Banana => "banana",
            TargetKind::GermanCredit => "german-credit",
        }
    }

    /// Step size used for this target in the benchmark experiments.
    pub fn preset_step_size(self) -> f64 {
        match self {
            TargetKind::Gaussian => 0.1,
            TargetKind::IllGauss => 0.001,
            TargetKind::Banana => 0.01,
            TargetKind::GermanCredit => 0.001,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            TargetKind::Gaussian => 5,
            TargetKind::IllGauss => 100,
            TargetKind::Banana => 2,
            TargetKind::GermanCredit => 25,
        }
    }
}

impl std::str::FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            TargetKind::Gaussian,
            TargetKind::IllGauss,
            TargetKind::Banana,
            TargetKind::GermanCredit,
        ]
        .into_iter()
        .find(|t| t.name() == s)
        .ok_or_else(|| Error::Usage(format!("unknown target `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalKind {
    Rw,
    Hmc,
    Nuts,
    Chees,
}

impl ProposalKind {
    pub fn name(self) -> &'static str {
        match self {
            ProposalKind::Rw => "rw",
            ProposalKind::Hmc => "hmc",
            ProposalKind::Nuts => "nuts",
            ProposalKind::Chees => "chees",
        }
    }
}

impl std::str::FromStr for ProposalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ProposalKind::Rw, ProposalKind::Hmc, ProposalKind::Nuts, ProposalKind::Chees]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown proposal `{s}`")))
    }
}

fn serialize_scheme<S: serde::Serializer>(scheme: &JitterScheme, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(scheme.name())
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub target: TargetKind,
    pub proposal: ProposalKind,
    #[serde(serialize_with = "serialize_scheme")]
    pub jitter: JitterScheme,
    pub particles: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub step_size: f64,
    pub init_length: f64,
    pub max_steps: usize,
    pub max_depth: usize,
    pub adam_lr: f64,
    pub warmup: usize,
    pub repeats: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Run every jitter scheme with ChEES plus NUTS.
    pub sweep: bool,
    /// Seed of the random eigenbasis of the ill-conditioned target.
    pub ill_seed: u64,
}

impl ExperimentConfig {
    pub fn for_target(target: TargetKind) -> Self {
        ExperimentConfig {
            target,
            proposal: ProposalKind::Chees,
            jitter: JitterScheme::Halton1d,
            particles: 1000,
            iterations: 200,
            burn_in: 100,
            step_size: target.preset_step_size(),
            init_length: 5.0,
            max_steps: 500,
            max_depth: DEFAULT_MAX_DEPTH,
            adam_lr: 0.025,
            warmup: 100,
            repeats: 10,
            seed: 0,
            out: PathBuf::from("results"),
            sweep: false,
            ill_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |key: &str, why: &str| Err(Error::Usage(format!("{key}: {why}")));
        if self.particles < 2 {
            return usage("particles", "must be at least 2");
        }
        if self.iterations == 0 {
            return usage("iterations", "must be at least 1");
        }
        if self.burn_in >= self.iterations {
            return usage("burn-in", "must be below iterations");
        }
        if self.repeats == 0 {
            return usage("repeats", "must be at least 1");
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return usage("step-size", "must be positive");
        }
        if !(self.init_length.is_finite() && self.init_length > 0.0) {
            return usage("init-L", "must be positive");
        }
        if self.max_steps == 0 {
            return usage("max-steps", "must be at least 1");
        }
        if !(self.adam_lr.is_finite() && self.adam_lr > 0.0) {
            return usage("adam-lr", "must be positive");
        }
        if self.warmup == 0 {
            return usage("warmup", "must be at least 1");
        }
        if self.sweep && self.proposal != ProposalKind::Chees {
            return usage("sweep", "only applies to the chees proposal");
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "chees-smc", about = "SMC sampler benchmarks with ChEES-adapted HMC")]
struct Flags {
    /// Config file (TOML); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// gaussian, ill-gauss, banana or german-credit.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    target: Option<String>,
    /// rw, hmc, nuts or chees.
    #[arg(long)]
    proposal: Option<String>,
    #[arg(long)]
    jitter: Option<String>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    #[arg(long = "step-size")]
    step_size: Option<f64>,
    #[arg(long = "init-L")]
    init_length: Option<f64>,
    #[arg(long = "max-steps")]
    max_steps: Option<usize>,
    #[arg(long = "max-depth")]
    max_depth: Option<usize>,
    #[arg(long = "adam-lr")]
    adam_lr: Option<f64>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run all thirteen jitter schemes with ChEES plus a NUTS baseline.
    #[arg(long)]
    sweep: bool,
    #[arg(long = "ill-seed")]
    ill_seed: Option<u64>,
}

/// Keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    target: Option<String>,
    proposal: Option<String>,
    jitter_scheme: Option<String>,
    particles: Option<usize>,
    iterations: Option<usize>,
    burn_in: Option<usize>,
    step_size: Option<f64>,
    #[serde(rename = "init_L")]
    init_length: Option<f64>,
    max_steps: Option<usize>,
    max_depth: Option<usize>,
    adam_lr: Option<f64>,
    warmup: Option<usize>,
    repeats: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    sweep: Option<bool>,
    ill_seed: Option<u64>,
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Usage(format!("{}: {}", path.display(), e.message())))
}

fn parse_jitter(s: &str) -> Result<JitterScheme> {
    s.parse().map_err(|_| Error::Usage(format!("jitter: unknown scheme `{s}`")))
}

macro_rules! layer {
    ($cfg:ident, $src:expr, $($field:ident),*) => {
        $(if let Some(v) = $src.$field.clone() { $cfg.$field = v; })*
    };
}

/// Resolves `args` (including the program name) into a validated config.
/// Precedence: flags, then config-file values, then the preset's defaults.
pub fn parse_config<I, S>(args: I) -> Result<ExperimentConfig>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let flags = Flags::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    let file = match &flags.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };

    let base_name = flags
        .target
        .as_ref()
        .or(flags.preset.as_ref())
        .or(file.target.as_ref())
        .or(file.preset.as_ref())
        .map(String::as_str)
        .unwrap_or("gaussian");
    let base_target: TargetKind = base_name.parse()?;
    let mut cfg = ExperimentConfig::for_target(base_target);

    layer!(cfg, file, particles, iterations, burn_in, step_size, init_length, max_steps,
        max_depth, adam_lr, warmup, repeats, seed, out, sweep, ill_seed);
    if let Some(p) = &file.proposal {
        cfg.proposal = p.parse()?;
    }
    if let Some(j) = &file.jitter_scheme {
        cfg.jitter = parse_jitter(j)?;
    }

    layer!(cfg, flags, particles, iterations, burn_in, step_size, init_length, max_steps,
        max_depth, adam_lr, warmup, repeats, seed, out, ill_seed);
    if flags.sweep {
        cfg.sweep = true;
    }
    if let Some(p) = &flags.proposal {
        cfg.proposal = p.parse()?;
    }
    if let Some(j) = &flags.jitter {
        cfg.jitter = parse_jitter(j)?;
    }
    if let (Some(preset), Some(target)) = (&flags.preset, &flags.target) {
        if preset != target {
            return Err(Error::Usage(format!(
                "preset `{preset}` conflicts with target `{target}`"
            )));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One sampler configuration within an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Chees(JitterScheme),
    Nuts,
    Hmc,
    RandomWalk,
}

impl Method {
    /// Display name used in the CSV `method` column.
    pub fn label(self) -> String {
        match self {
            Method::Chees(s) => s.label().to_string(),
            Method::Nuts => "NUTS".into(),
            Method::Hmc => "HMC".into(),
            Method::RandomWalk => "Random Walk".into(),
        }
    }

    fn slug(self) -> String {
        match self {
            Method::Chees(s) => format!("chees-{}", s.name()),
            Method::Nuts => "nuts".into(),
            Method::Hmc => "hmc".into(),
            Method::RandomWalk => "rw".into(),
        }
    }
}

pub fn methods(cfg: &ExperimentConfig) -> Vec<Method> {
    if cfg.sweep {
        let mut all: Vec<Method> = JitterScheme::ALL.iter().map(|&s| Method::Chees(s)).collect();
        all.push(Method::Nuts);
        return all;
    }
    vec![match cfg.proposal {
        ProposalKind::Chees => Method::Chees(cfg.jitter),
        ProposalKind::Nuts => Method::Nuts,
        ProposalKind::Hmc => Method::Hmc,
        ProposalKind::Rw => Method::RandomWalk,
    }]
}

pub fn build_proposal(cfg: &ExperimentConfig, method: Method, seed: u64) -> Result<Proposal<f64>> {
    Ok(match method {
        Method::RandomWalk => Proposal::RandomWalk {
            scale: cfg.step_size,
        },
        Method::Hmc => Proposal::Hmc {
            steps: ((cfg.init_length / cfg.step_size).ceil() as usize).clamp(1, cfg.max_steps),
        },
        Method::Nuts => Proposal::Nuts {
            max_depth: cfg.max_depth,
        },
        Method::Chees(scheme) => Proposal::Chees {
            config: CheesConfig {
                step_size: cfg.step_size,
                max_steps: cfg.max_steps,
                initial_length: cfg.init_length,
                warmup: cfg.warmup,
                adam: AdamConfig {
                    learning_rate: cfg.adam_lr,
                    ..AdamConfig::default()
                },
            },
            jitter: generate_jitter(scheme, cfg.particles, cfg.iterations, seed)?,
        },
    })
}

/// Target instance plus the held-out split for German credit.
pub struct ResolvedTarget {
    pub target: Box<dyn Target<f64>>,
    pub test_split: Option<GermanCreditDataset>,
}

pub fn build_target(cfg: &ExperimentConfig) -> Result<ResolvedTarget> {
    Ok(match cfg.target {
        TargetKind::Gaussian => ResolvedTarget {
            target: Box::new(gaussian_target::<f64>()),
            test_split: None,
        },
        TargetKind::IllGauss => ResolvedTarget {
            target: Box::new(ill_conditioned_target::<f64>(cfg.ill_seed)),
            test_split: None,
        },
        TargetKind::Banana => ResolvedTarget {
            target: Box::new(banana_target::<f64>()),
            test_split: None,
        },
        TargetKind::GermanCredit => {
            let path = std::env::var_os(DATASET_ENV).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "{DATASET_ENV} must point at german.data-numeric"
                ))
            })?;
            let data = load_german_credit(PathBuf::from(path))?;
            let (train, test) = data.split(TRAIN_FRACTION, SPLIT_SEED);
            ResolvedTarget {
                target: Box::new(logistic_target::<f64>(&train)),
                test_split: Some(test),
            }
        }
    })
}

/// Results for one method across all repeats.
#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub summary: RunSummary,
    pub runs: Vec<RunSummary>,
    pub classification: Option<ClassificationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub methods: Vec<MethodResult>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn iterations_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "iteration",
        "particles",
        "ess_before_resample",
        "ess",
        "resampled",
        "grad_evals",
        "cumulative_grad_evals",
        "grad_evals_per_particle",
        "ess_per_grad",
        "mse_mean",
        "mse_var",
        "current_L",
        "chees_criterion",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=dim).map(|d| format!("mean_{d}")));
    h.extend((1..=dim).map(|d| format!("var_{d}")));
    h
}

fn iteration_record(d: &IterationDiagnostics) -> Vec<String> {
    let mut r = vec![
        d.iteration.to_string(),
        d.particles.to_string(),
        d.ess_before_resample.to_string(),
        d.ess.to_string(),
        (d.resampled as u8).to_string(),
        d.grad_evals.to_string(),
        d.cumulative_grad_evals.to_string(),
        d.grad_evals_per_particle().to_string(),
        fmt_opt(d.ess_per_grad()),
        fmt_opt(d.mse_mean),
        fmt_opt(d.mse_var),
        fmt_opt(d.trajectory_length),
        fmt_opt(d.chees_criterion),
    ];
    r.extend(d.est_mean.iter().map(f64::to_string));
    r.extend(d.est_var.iter().map(f64::to_string));
    r
}

/// Tracks written files so a failed experiment can remove them.
struct Outputs {
    files: Vec<PathBuf>,
    dirs: Vec<PathBuf>,
}

impl Outputs {
    fn create_dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            self.dirs.push(dir.to_path_buf());
        }
        Ok(())
    }

    fn csv(&mut self, path: PathBuf, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        self.files.push(path.clone());
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    fn text(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        self.files.push(path.clone());
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    }

    fn remove_all(&self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in self.dirs.iter().rev() {
            let _ = fs::remove_dir(d);
        }
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Runs every method for every repeat and writes all outputs under
/// `cfg.out`. On error, files written so far are removed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut outputs = Outputs {
        files: Vec::new(),
        dirs: Vec::new(),
    };
    match execute(cfg, &mut outputs) {
        Ok(methods) => Ok(ExperimentOutput {
            config: cfg.clone(),
            methods,
            files: outputs.files,
        }),
        Err(e) => {
            outputs.remove_all();
            Err(e)
        }
    }
}

struct Series {
    method: String,
    neff: BTreeMap<usize, Vec<f64>>,
    mse_mean: BTreeMap<usize, Vec<f64>>,
    mse_var: BTreeMap<usize, Vec<f64>>,
}

fn execute(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<MethodResult>> {
    out.create_dir(&cfg.out)?;
    let resolved = build_target(cfg)?;
    let target = resolved.target.as_ref();
    let dim = target.dim();
    let methods = methods(cfg);

    let mut results = Vec::new();
    let mut series = Vec::new();
    let mut samples: Vec<Vec<String>> = Vec::new();

    for &method in &methods {
        let dir = if cfg.sweep {
            let d = cfg.out.join(method.slug());
            out.create_dir(&d)?;
            d
        } else {
            cfg.out.clone()
        };
        let mut runs = Vec::new();
        let mut reports = Vec::new();
        let mut s = Series {
            method: method.label(),
            neff: BTreeMap::new(),
            mse_mean: BTreeMap::new(),
            mse_var: BTreeMap::new(),
        };
        for r in 1..=cfg.repeats {
            let seed = cfg.seed + r as u64;
            let proposal = build_proposal(cfg, method, seed)?;
            let smc_config = SmcConfig {
                particles: cfg.particles,
                iterations: cfg.iterations,
                burn_in: cfg.burn_in,
                step_size: cfg.step_size,
                seed,
                keep_last: if cfg.target == TargetKind::Banana && r == 1 {
                    SAMPLE_TAIL.min(cfg.iterations)
                } else {
                    0
                },
            };
            log::info!("{} run {r}/{} (seed {seed})", method.label(), cfg.repeats);
            let run: SmcRun<f64> = run_smc(&smc_config, target, &proposal)?;

            let rows: Vec<Vec<String>> = run.diagnostics.iter().map(iteration_record).collect();
            out.csv(dir.join(format!("iterations_run{r}.csv")), &iterations_header(dim), &rows)?;

            for d in &run.diagnostics {
                if let Some(v) = d.ess_per_grad() {
                    s.neff.entry(d.iteration).or_default().push(v);
                }
                if let Some(v) = d.mse_mean {
                    s.mse_mean.entry(d.iteration).or_default().push(v);
                }
                if let Some(v) = d.mse_var {
                    s.mse_var.entry(d.iteration).or_default().push(v);
                }
            }
            for (_, positions) in &run.snapshots {
                for theta in positions {
                    samples.push(vec![method.label(), theta[0].to_string(), theta[1].to_string()]);
                }
            }
            if let Some(test) = &resolved.test_split {
                let weights = run.ensemble.normalized_weights()?;
                reports.push(classification_report(&run.ensemble.positions, &weights, test, 0.5)?);
            }
            runs.push(summarize_run(&run.diagnostics, cfg.burn_in));
        }
        series.push(s);
        results.push(MethodResult {
            method: method.label(),
            summary: mean_summary(&runs),
            runs,
            classification: (!reports.is_empty()).then(|| mean_report(&reports)),
        });
    }

    write_summaries(cfg, out, &results)?;
    write_figure_data(cfg, out, &series, &samples)?;
    Ok(results)
}

fn mean_report(reports: &[ClassificationReport]) -> ClassificationReport {
    let n = reports.len() as f64;
    let avg = |f: fn(&ClassificationReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    ClassificationReport {
        accuracy: avg(|r| r.accuracy),
        precision: avg(|r| r.precision),
        recall: avg(|r| r.recall),
        f1: avg(|r| r.f1),
        specificity: avg(|r| r.specificity),
        auroc: avg(|r| r.auroc),
    }
}

fn write_summaries(cfg: &ExperimentConfig, out: &mut Outputs, results: &[MethodResult]) -> Result<()> {
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|m| {
            vec![
                m.method.clone(),
                m.summary.grad_evals_per_sample.to_string(),
                fmt_opt(m.summary.ess_per_grad),
            ]
        })
        .collect();
    out.csv(
        cfg.out.join("summary.csv"),
        &header(&["method", "grad_evals_per_sample", "ess_per_grad"]),
        &rows,
    )?;

    let json = serde_json::to_string_pretty(&serde_json::json!({
        "config": cfg,
        "methods": results,
    }))?;
    out.text(cfg.out.join("summary.json"), &(json + "\n"))?;

    let classified: Vec<Vec<String>> = results
        .iter()
        .filter_map(|m| {
            m.classification.map(|c| {
                vec![
                    m.method.clone(),
                    c.accuracy.to_string(),
                    c.precision.to_string(),
                    c.recall.to_string(),
                    c.f1.to_string(),
                    c.specificity.to_string(),
                    c.auroc.to_string(),
                ]
            })
        })
        .collect();
    if !classified.is_empty() {
        out.csv(
            cfg.out.join("classification.csv"),
            &header(&["method", "accuracy", "precision", "recall", "f1", "specificity", "auroc"]),
            &classified,
        )?;
    }
    Ok(())
}

fn series_rows(series: &[Series], pick: fn(&Series) -> &BTreeMap<usize, Vec<f64>>) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for s in series {
        for (k, values) in pick(s) {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            rows.push(vec![k.to_string(), s.method.clone(), mean.to_string()]);
        }
    }
    rows
}

/// Per-iteration values are averaged over repeats.
fn write_figure_data(
    cfg: &ExperimentConfig,
    out: &mut Outputs,
    series: &[Series],
    samples: &[Vec<String>],
) -> Result<()> {
    let h = header(&["iteration", "method", "value"]);
    out.csv(cfg.out.join("neff_per_grad.csv"), &h, &series_rows(series, |s| &s.neff))?;
    if series.iter().any(|s| !s.mse_mean.is_empty()) {
        out.csv(cfg.out.join("mse_mean.csv"), &h, &series_rows(series, |s| &s.mse_mean))?;
        out.csv(cfg.out.join("mse_var.csv"), &h, &series_rows(series, |s| &s.mse_var))?;
    }
    if cfg.target == TargetKind::Banana {
        out.csv(cfg.out.join("banana_samples.csv"), &header(&["method", "x", "y"]), samples)?;
    }
    Ok(())
}

/// Process entry point; returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Flags::try_parse_from(&args) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let _ = e.print();
            return 0;
        }
    }
    let cfg = match parse_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return 1;
        }
    };
    match run_experiment(&cfg) {
        Ok(output) => {
            for m in &output.methods {
                println!(
                    "{}\t{:.2}\t{}",
                    m.method,
                    m.summary.grad_evals_per_sample,
                    m.summary
                        .ess_per_grad
                        .map(|v| format!("{v:.3e}"))
                        .unwrap_or_else(|| "n/a".into())
                );
            }
            0
        }
        Err(Error::Usage(msg)) => {
            eprintln!("usage: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<ExperimentConfig> {
        parse_config(std::iter::once("chees-smc").chain(args.iter().copied()))
    }

    #[test]
    fn presets() {
        let c = parse(&["--preset", "gaussian"]).unwrap();
        assert_eq!((c.step_size, c.target.dim()), (0.1, 5));
        assert_eq!((c.particles, c.iterations, c.burn_in, c.repeats), (1000, 200, 100, 10));
        assert_eq!(c.init_length, 5.0);
        assert_eq!(parse(&["--preset", "ill-gauss"]).unwrap().step_size, 0.001);
        assert_eq!(parse(&["--preset", "german-credit"]).unwrap().step_size, 0.001);
        let b = parse(&["--preset", "banana", "--step-size", "0.02"]).unwrap();
        assert_eq!((b.target, b.step_size), (TargetKind::Banana, 0.02));
    }

    #[test]
    fn validation_errors_name_the_key() {
        let e = parse(&["--particles", "0"]).unwrap_err();
        assert!(matches!(&e, Error::Usage(m) if m.contains("particles")));
        let e = parse(&["--iterations", "10", "--burn-in", "10"]).unwrap_err();
        assert!(matches!(&e, Error::Usage(m) if m.contains("burn-in")));
        assert!(parse(&["--jitter", "bogus"]).is_err());
        assert!(parse(&["--preset", "banana", "--target", "gaussian"]).is_err());
        assert!(parse(&["--unknown-flag", "1"]).is_err());
    }

    #[test]
    fn config_file_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        fs::write(
            &path,
            "preset = \"banana\"\nparticles = 300\nstep_size = 0.05\njitter_scheme = \"1d-sobol\"\ninit_L = 2.5\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let c = parse(&["--config", p, "--step-size", "0.07"]).unwrap();
        assert_eq!(c.target, TargetKind::Banana);
        assert_eq!((c.particles, c.step_size, c.init_length), (300, 0.07, 2.5));
        assert_eq!(c.jitter, JitterScheme::Sobol1d);

        fs::write(&path, "particls = 3\n").unwrap();
        assert!(matches!(parse(&["--config", p]), Err(Error::Usage(_))));
    }

    #[test]
    fn sweep_covers_table_rows() {
        let c = parse(&["--sweep"]).unwrap();
        let m = methods(&c);
        assert_eq!(m.len(), 14);
        assert_eq!(m.last(), Some(&Method::Nuts));
    }
}
