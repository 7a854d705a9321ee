//! Euler–Maruyama time stepping for consensus-based optimization and sampling.
//!
//! Every step freezes the means at the ensemble of the step's start, moves
//! each particle with its own random stream, and only then advances `beta`.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterState;
use crate::ensemble::{BetaSchedule, Ensemble, NoiseKind, NoiseModel};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::linalg::psd_sqrt;
use crate::matrix::{norm, Matrix};
use crate::means::{neg_beta_potential, polarized_means_from, polarized_moments_from, standard_mean_from, standard_moments_from};
use crate::objectives::Objective;
use crate::prox::proximal;
use crate::rng::{particle_streams, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaMode {
    #[default]
    Optimization,
    Sampling,
}

/// `1` for optimization, `1 / (1 + beta)` for sampling.
pub fn lambda_for(mode: LambdaMode, beta: f64) -> f64 {
    match mode {
        LambdaMode::Optimization => 1.0,
        LambdaMode::Sampling => 1.0 / (1.0 + beta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Method {
    StandardCbo,
    PolarizedCbo,
    ClusterCbo { clusters: usize, alpha: f64, inner_iterations: usize },
    StandardCbs { lambda: LambdaMode },
    PolarizedCbs { lambda: LambdaMode },
    /// Zero-temperature drift toward the proximal point `p(x)` of the kernel
    /// width; the limit of polarized CBO with a Gaussian kernel as `beta -> inf`.
    Proximal { tol: f64 },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::StandardCbo => "standard-cbo",
            Method::PolarizedCbo => "polarized-cbo",
            Method::ClusterCbo { .. } => "cluster-cbo",
            Method::StandardCbs { .. } => "standard-cbs",
            Method::PolarizedCbs { .. } => "polarized-cbs",
            Method::Proximal { .. } => "proximal-cbo",
        }
    }

    pub fn is_sampling(&self) -> bool {
        matches!(self, Method::StandardCbs { .. } | Method::PolarizedCbs { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub noise: NoiseModel,
    pub method: Method,
    pub schedule: BetaSchedule,
    pub kernel: Kernel,
    /// Snapshot every `snapshot_stride` steps; the first and last state are always kept.
    pub snapshot_stride: usize,
}

impl StepperConfig {
    pub fn new(method: Method, kernel: Kernel, noise: NoiseModel, schedule: BetaSchedule) -> Self {
        Self { dt: 0.01, noise, method, schedule, kernel, snapshot_stride: 1 }
    }

    pub fn validate(&self, ensemble: &Ensemble) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        NoiseModel::new(self.noise.kind, self.noise.sigma)?;
        BetaSchedule::new(self.schedule.beta0, self.schedule.factor, self.schedule.beta_max)?;
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidInput("snapshot stride must be >= 1".into()));
        }
        match self.method {
            Method::ClusterCbo { clusters, alpha, .. } => {
                if clusters == 0 || clusters > ensemble.len() {
                    return Err(Error::InvalidInput(format!("need 1 <= clusters <= J, got {clusters}")));
                }
                if !(alpha >= 0.0) {
                    return Err(Error::InvalidInput(format!("alpha must be >= 0, got {alpha}")));
                }
            }
            Method::Proximal { tol } => {
                if !self.kernel.kappa().is_finite() {
                    return Err(Error::InvalidInput("proximal drift needs a finite kernel width".into()));
                }
                if !(tol > 0.0) {
                    return Err(Error::InvalidInput("proximal tolerance must be positive".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One Euler–Maruyama CBO update `x <- x - dt (x - m) + sigma n`.
pub fn cbo_step(ensemble: &Ensemble, means: &Matrix, dt: f64, noise: NoiseModel, rngs: &mut [RngStream]) -> Result<Ensemble> {
    let (j, d) = (ensemble.len(), ensemble.dim());
    check_means(ensemble, means)?;
    if rngs.len() != j {
        return Err(Error::DimensionMismatch { expected: j, got: rngs.len() });
    }
    let mut next = ensemble.positions().clone();
    next.as_mut_slice()
        .par_chunks_mut(d)
        .zip(rngs.par_iter_mut())
        .enumerate()
        .for_each(|(i, (row, rng))| {
            let m = means.row(i);
            let mut xi = vec![0.0; d];
            rng.fill_gaussian_increment(dt, &mut xi);
            let diff: Vec<f64> = row.iter().zip(m).map(|(x, m)| x - m).collect();
            match noise.kind {
                NoiseKind::Isotropic => {
                    let scale = norm(&diff);
                    for n in 0..d {
                        row[n] = row[n] - dt * diff[n] + noise.sigma * (scale * xi[n]);
                    }
                }
                NoiseKind::Coordinatewise => {
                    for n in 0..d {
                        row[n] = row[n] - dt * diff[n] + noise.sigma * (diff[n] * xi[n]);
                    }
                }
            }
        });
    finish(next)
}

/// One Euler–Maruyama CBS update `x <- x - dt (x - m) + sqrt(2/lambda) C^{1/2} xi`.
///
/// `covs` holds either one covariance per particle or a single shared one.
pub fn cbs_step(
    ensemble: &Ensemble,
    means: &Matrix,
    covs: &[DMatrix<f64>],
    dt: f64,
    lambda: f64,
    rngs: &mut [RngStream],
) -> Result<Ensemble> {
    let (j, d) = (ensemble.len(), ensemble.dim());
    check_means(ensemble, means)?;
    if covs.len() != j && covs.len() != 1 {
        return Err(Error::DimensionMismatch { expected: j, got: covs.len() });
    }
    if rngs.len() != j {
        return Err(Error::DimensionMismatch { expected: j, got: rngs.len() });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let amp = (2.0 / lambda).sqrt();
    let roots: Vec<DMatrix<f64>> = covs
        .par_iter()
        .map(|c| psd_sqrt(c).map(|s| s * amp))
        .collect::<Result<_>>()?;
    let mut next = ensemble.positions().clone();
    next.as_mut_slice()
        .par_chunks_mut(d)
        .zip(rngs.par_iter_mut())
        .enumerate()
        .for_each(|(i, (row, rng))| {
            let m = means.row(i);
            let s = if roots.len() == 1 { &roots[0] } else { &roots[i] };
            let xi = DVector::from_vec(rng.gaussian_increment(dt, d));
            let kick = s * xi;
            for n in 0..d {
                row[n] = row[n] - dt * (row[n] - m[n]) + kick[n];
            }
        });
    finish(next)
}

fn check_means(ensemble: &Ensemble, means: &Matrix) -> Result<()> {
    if means.rows() != ensemble.len() || means.cols() != ensemble.dim() {
        return Err(Error::DimensionMismatch { expected: ensemble.len() * ensemble.dim(), got: means.rows() * means.cols() });
    }
    if !means.is_finite() {
        return Err(Error::NonFinite("means".into()));
    }
    Ok(())
}

fn finish(next: Matrix) -> Result<Ensemble> {
    if !next.is_finite() {
        return Err(Error::NonFinite("particle update".into()));
    }
    Ensemble::new(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub beta: f64,
    pub positions: Matrix,
    pub means: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub stride: usize,
    /// Set when the run aborted; the snapshots then end at the last good state.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory always holds the initial snapshot")
    }

    pub fn final_means(&self) -> &Matrix {
        &self.last().means
    }

    pub fn betas(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.beta).collect()
    }
}

/// Particle system plus the state needed to compute its means.
pub struct Stepper<'a> {
    config: StepperConfig,
    objective: &'a Objective,
    ensemble: Ensemble,
    rngs: Vec<RngStream>,
    master_seed: u64,
    cluster: Option<ClusterState>,
    beta: f64,
    step: usize,
}

/// Means and, for sampling methods, the diffusion covariances.
pub struct Moments {
    pub means: Matrix,
    pub covariances: Vec<DMatrix<f64>>,
}

impl<'a> Stepper<'a> {
    pub fn new(config: StepperConfig, objective: &'a Objective, ensemble: Ensemble, master_seed: u64) -> Result<Self> {
        config.validate(&ensemble)?;
        if objective.dim() != ensemble.dim() {
            return Err(Error::DimensionMismatch { expected: objective.dim(), got: ensemble.dim() });
        }
        let rngs = particle_streams(master_seed, ensemble.len());
        Ok(Self {
            beta: config.schedule.initial(),
            config,
            objective,
            ensemble,
            rngs,
            master_seed,
            cluster: None,
            step: 0,
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    pub fn cluster_state(&self) -> Option<&ClusterState> {
        self.cluster.as_ref()
    }

    /// Means at the current ensemble and inverse temperature. For the cluster
    /// method this advances the assignment state by one pass.
    pub fn moments(&mut self) -> Result<Moments> {
        let nbv = neg_beta_potential(&self.ensemble, self.objective, self.beta);
        let j = self.ensemble.len();
        let kernel = self.config.kernel;
        let out = match self.config.method {
            Method::StandardCbo => Moments { means: Matrix::broadcast(j, &standard_mean_from(&self.ensemble, &nbv)), covariances: vec![] },
            Method::PolarizedCbo => Moments { means: polarized_means_from(&self.ensemble, &kernel, &nbv), covariances: vec![] },
            Method::ClusterCbo { clusters, alpha, inner_iterations } => {
                if self.cluster.is_none() {
                    self.cluster = Some(ClusterState::init_random(&self.ensemble, &nbv, clusters, alpha, self.master_seed)?);
                }
                let state = self.cluster.as_mut().expect("initialized above");
                let (means, events) = state.step(&self.ensemble, &kernel, &nbv, inner_iterations);
                if events != Default::default() {
                    debug!("step {}: cluster fallbacks {events:?}", self.step);
                }
                Moments { means, covariances: vec![] }
            }
            Method::StandardCbs { .. } => {
                let (m, c) = standard_moments_from(&self.ensemble, &nbv);
                Moments { means: Matrix::broadcast(j, &m), covariances: vec![c] }
            }
            Method::PolarizedCbs { .. } => {
                let (means, covariances) = polarized_moments_from(&self.ensemble, &kernel, &nbv);
                Moments { means, covariances }
            }
            Method::Proximal { tol } => {
                let kappa = kernel.kappa();
                let d = self.ensemble.dim();
                let mut means = Matrix::zeros(j, d);
                for i in 0..j {
                    let p = proximal(self.objective, kappa, self.ensemble.particle(i), tol)?;
                    means.row_mut(i).copy_from_slice(&p);
                }
                Moments { means, covariances: vec![] }
            }
        };
        Ok(out)
    }

    /// Move the particles with precomputed moments, then advance `beta`.
    pub fn advance(&mut self, moments: &Moments) -> Result<()> {
        let c = &self.config;
        let next = match c.method {
            Method::StandardCbs { lambda } | Method::PolarizedCbs { lambda } => cbs_step(
                &self.ensemble,
                &moments.means,
                &moments.covariances,
                c.dt,
                lambda_for(lambda, self.beta),
                &mut self.rngs,
            )?,
            _ => cbo_step(&self.ensemble, &moments.means, c.dt, c.noise, &mut self.rngs)?,
        };
        self.ensemble = next;
        self.beta = c.schedule.advance(self.beta);
        self.step += 1;
        Ok(())
    }

    /// Compute means and take one step; returns the means that drove it.
    pub fn step(&mut self) -> Result<Matrix> {
        let m = self.moments()?;
        self.advance(&m)?;
        Ok(m.means)
    }

    fn snapshot(&self, means: Matrix) -> Snapshot {
        Snapshot { step: self.step, time: self.time(), beta: self.beta, positions: self.ensemble.positions().clone(), means }
    }
}

fn is_numerical_failure(e: &Error) -> bool {
    matches!(e, Error::NonFinite(_) | Error::NotPositiveSemidefinite(_) | Error::ProximalNotConverged { .. })
}

/// Run `n_steps` steps from `ensemble0`, recording thinned snapshots.
///
/// The last snapshot holds the final ensemble and the means evaluated at it.
/// A numerical failure ends the run early with [`Trajectory::failure`] set;
/// invalid configurations are returned as errors.
pub fn run(config: &StepperConfig, ensemble0: Ensemble, objective: &Objective, n_steps: usize, master_seed: u64) -> Result<Trajectory> {
    let mut stepper = Stepper::new(*config, objective, ensemble0, master_seed)?;
    let mut traj = Trajectory { snapshots: Vec::new(), stride: config.snapshot_stride, failure: None };
    for _ in 0..n_steps {
        let moments = match stepper.moments() {
            Ok(m) => m,
            Err(e) if is_numerical_failure(&e) => {
                traj.failure = Some(format!("step {}: {e}", stepper.step));
                return Ok(traj_with_partial(traj, &stepper));
            }
            Err(e) => return Err(e),
        };
        if stepper.step % config.snapshot_stride == 0 {
            traj.snapshots.push(stepper.snapshot(moments.means.clone()));
        }
        if let Err(e) = stepper.advance(&moments) {
            if is_numerical_failure(&e) {
                traj.failure = Some(format!("step {}: {e}", stepper.step));
                return Ok(traj_with_partial(traj, &stepper));
            }
            return Err(e);
        }
    }
    match stepper.moments() {
        Ok(m) => traj.snapshots.push(stepper.snapshot(m.means)),
        Err(e) if is_numerical_failure(&e) => {
            traj.failure = Some(format!("final means: {e}"));
            return Ok(traj_with_partial(traj, &stepper));
        }
        Err(e) => return Err(e),
    }
    Ok(traj)
}

fn traj_with_partial(mut traj: Trajectory, stepper: &Stepper<'_>) -> Trajectory {
    if traj.snapshots.last().map(|s| s.step) != Some(stepper.step) {
        let d = stepper.ensemble.dim();
        let means = Matrix::from_vec(stepper.ensemble.len(), d, vec![f64::NAN; stepper.ensemble.len() * d])
            .expect("shape matches");
        traj.snapshots.push(stepper.snapshot(means));
    }
    traj
}
