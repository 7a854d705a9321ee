use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use polarcbo::diagnostics::{lyapunov_decay_rate, stationarity_check, DecayFit, GaussianTarget, StationarityReport};
use polarcbo::dynamics::{run, LambdaMode};
use polarcbo::ensemble::{Ensemble, NoiseKind};
use polarcbo::harness::checks::{lyapunov_config, lyapunov_objective, run_check, CHECK_IDS};
use polarcbo::harness::config::{parse_float, parse_seeds, KernelName, MethodName, RunConfig};
use polarcbo::harness::emit::{render, render_sampling, to_json, trajectory_csv, Format};
use polarcbo::harness::{preset, run_sampling, run_seed, run_table};
use polarcbo::{Error, Matrix, Result};

#[derive(Parser)]
#[command(name = "polarcbo", version, about = "Polarized consensus-based optimization and sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration over its seeds.
    Run(RunArgs),
    /// Run a preset catalog or a set of config files.
    Table(TableArgs),
    /// Run a consensus-based sampling experiment.
    Sample(TableArgs),
    /// Run the diagnostics suite.
    Diag(DiagArgs),
    /// Run the acceptance checks; exits nonzero if any fails.
    Check(CheckArgs),
    /// List objectives and presets.
    List,
}

#[derive(Args, Default)]
struct Overrides {
    /// Flat TOML (or JSON) config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long, value_parser = parse_float)]
    kappa: Option<f64>,
    #[arg(long, value_parser = parse_float)]
    beta0: Option<f64>,
    #[arg(long, value_parser = parse_float)]
    beta_factor: Option<f64>,
    #[arg(long, value_parser = parse_float)]
    beta_max: Option<f64>,
    #[arg(long, value_parser = parse_float)]
    sigma: Option<f64>,
    /// isotropic | coordinatewise
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, value_parser = parse_float)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long, value_parser = parse_float)]
    alpha: Option<f64>,
    /// optimization | sampling
    #[arg(long)]
    lambda: Option<String>,
    /// Seed count `N`, range `a..b`, or list `a,b,c`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// Record zero wall time so repeated runs produce identical files.
    #[arg(long)]
    no_timing: bool,
}

impl Overrides {
    fn base(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => RunConfig::from_file(p),
            None => Ok(RunConfig::default()),
        }
    }

    fn apply(&self, mut c: RunConfig) -> Result<RunConfig> {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { c.$f = v.clone(); } )* };
        }
        set!(objective, dim, kappa, beta0, beta_factor, beta_max, sigma, dt, steps, particles, clusters, alpha, snapshot_stride);
        if let Some(m) = &self.method {
            c.method = MethodName::parse(m)?;
        }
        if let Some(k) = &self.kernel {
            c.kernel = KernelName::parse(k)?;
        }
        if let Some(n) = &self.noise {
            c.noise = match n.as_str() {
                "isotropic" => NoiseKind::Isotropic,
                "coordinatewise" | "coordinate-wise" => NoiseKind::Coordinatewise,
                _ => return Err(Error::Unknown { kind: "noise model", name: n.clone() }),
            };
        }
        if let Some(l) = &self.lambda {
            c.lambda = match l.as_str() {
                "optimization" => LambdaMode::Optimization,
                "sampling" => LambdaMode::Sampling,
                _ => return Err(Error::Unknown { kind: "lambda mode", name: l.clone() }),
            };
        }
        if let Some(s) = &self.seeds {
            c.seeds = parse_seeds(s)?;
        }
        if self.no_timing {
            c.record_timing = false;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct Output {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json | markdown
    #[arg(long, default_value = "markdown")]
    format: String,
}

impl Output {
    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => Ok(std::fs::write(p, text)?),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    output: Output,
    /// Write the first seed's thinned snapshots as CSV.
    #[arg(long)]
    dump_trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Preset catalog name (see `list`).
    #[arg(long)]
    preset: Option<String>,
    /// Additional config files, one row each.
    #[arg(long = "config-file")]
    config_files: Vec<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(flatten)]
    output: Output,
}

impl TableArgs {
    fn configs(&self) -> Result<Vec<RunConfig>> {
        let mut base = match &self.preset {
            Some(p) => preset(p)?,
            None => vec![],
        };
        for p in &self.config_files {
            base.push(RunConfig::from_file(p)?);
        }
        if base.is_empty() {
            base.push(self.overrides.base()?);
        }
        base.into_iter().map(|c| self.overrides.apply(c)).collect()
    }
}

#[derive(Args)]
struct DiagArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Comma-separated criterion ids; all when absent.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DiagReport {
    stationarity: StationarityReport,
    sigma3: Vec<Vec<f64>>,
    lyapunov: DecayFit,
    passes: bool,
}

fn cmd_run(a: &RunArgs) -> Result<bool> {
    let config = a.overrides.apply(a.overrides.base()?)?;
    let reports = run_table(std::slice::from_ref(&config))?;
    if let Some(path) = &a.dump_trajectory {
        let (_, traj) = run_seed(&config, config.seeds[0])?;
        std::fs::write(path, trajectory_csv(&traj))?;
        info!("wrote trajectory to {}", path.display());
    }
    a.output.write(&render(&reports, Format::parse(&a.output.format)?)?)?;
    Ok(!reports.iter().any(|r| r.any_failed()))
}

fn cmd_table(a: &TableArgs) -> Result<bool> {
    let configs = a.configs()?;
    let reports = run_table(&configs)?;
    a.output.write(&render(&reports, Format::parse(&a.output.format)?)?)?;
    Ok(!reports.iter().any(|r| r.any_failed()))
}

fn cmd_sample(a: &TableArgs) -> Result<bool> {
    let configs: Vec<RunConfig> = a
        .configs()?
        .into_iter()
        .map(|mut c| {
            if !c.method.is_sampling() {
                c.method = MethodName::PolarizedCbs;
            }
            if a.overrides.lambda.is_none() {
                c.lambda = LambdaMode::Sampling;
            }
            c
        })
        .collect();
    let reports = configs.iter().map(run_sampling).collect::<Result<Vec<_>>>()?;
    a.output.write(&render_sampling(&reports, Format::parse(&a.output.format)?)?)?;
    Ok(!reports.iter().any(|r| r.any_failed()))
}

fn cmd_diag(a: &DiagArgs) -> Result<bool> {
    let d = a.dim;
    let cov = DMatrix::from_fn(d, d, |r, c| if r == c { 1.0 + 0.5 * r as f64 } else { 0.2 });
    let target = GaussianTarget::with_kappa(DVector::zeros(d), cov.clone(), a.kappa)?;
    let l = cov.cholesky().ok_or_else(|| Error::InvalidInput("diag covariance".into()))?.l();
    let queries: Vec<Vec<f64>> = [0.0, 0.5, -0.5, 1.0, -1.0]
        .iter()
        .map(|s| (&l * DVector::from_element(d, *s)).iter().copied().collect())
        .collect();
    let stationarity = stationarity_check(&target, a.beta, a.samples, &Matrix::from_rows(&queries)?, a.seed)?;
    let s3 = target.sigma3(a.beta)?;
    let obj = lyapunov_objective(d.min(2))?;
    let e = Ensemble::uniform_box(20, d.min(2), -3.0, 3.0, a.seed)?;
    let traj = run(&lyapunov_config(a.sigma), e, &obj, a.steps, a.seed)?;
    let lyapunov = lyapunov_decay_rate(&traj, &obj, 1.0)?;
    let passes = stationarity.passes(5.0, 0.05) && lyapunov.decays();
    let report = DiagReport {
        stationarity,
        sigma3: (0..d).map(|r| (0..d).map(|c| s3[(r, c)]).collect()).collect(),
        lyapunov,
        passes,
    };
    let text = to_json(&report)?;
    match &a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(passes)
}

fn cmd_check(a: &CheckArgs) -> Result<bool> {
    let ids: Vec<u8> = if a.only.is_empty() { CHECK_IDS.to_vec() } else { a.only.clone() };
    let mut outcomes = Vec::new();
    for id in ids {
        let o = run_check(id).ok_or_else(|| Error::Unknown { kind: "criterion", name: id.to_string() })?;
        println!("{}", o.line());
        outcomes.push(o);
    }
    if let Some(p) = &a.out {
        std::fs::write(p, to_json(&outcomes)?)?;
    }
    Ok(outcomes.iter().all(|o| o.passed || !o.asserted))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Table(a) => cmd_table(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Diag(a) => cmd_diag(a),
        Command::Check(a) => cmd_check(a),
        Command::List => {
            println!("objectives: {}", polarcbo::objectives::REGISTRY.join(", "));
            println!("presets: {}", polarcbo::harness::presets::PRESETS.join(", "));
            println!("methods: {}", MethodName::ALL.map(|m| m.as_str()).join(", "));
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
