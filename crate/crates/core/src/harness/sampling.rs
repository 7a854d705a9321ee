//! Consensus-based sampling experiments summarized per target mode.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run, LambdaMode};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::harness::config::RunConfig;
use crate::matrix::{dist_sq, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeStats {
    pub mode: Vec<f64>,
    pub count: usize,
    pub fraction: f64,
    /// `None` when no particle landed in this cell.
    pub mean: Option<Vec<f64>>,
    /// Unbiased sample covariance; `None` for fewer than two particles.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSeed {
    pub seed: u64,
    pub failed: bool,
    pub failure: Option<String>,
    pub wall_time: f64,
    pub modes: Vec<ModeStats>,
    pub final_positions: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub config: RunConfig,
    pub config_hash: String,
    pub seeds: Vec<SamplingSeed>,
}

impl SamplingReport {
    pub fn any_failed(&self) -> bool {
        self.seeds.iter().any(|s| s.failed)
    }
}

/// Assign every particle to its nearest mode and summarize each cell.
pub fn partition_by_mode(ensemble: &Ensemble, modes: &[Vec<f64>]) -> Vec<ModeStats> {
    let d = ensemble.dim();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); modes.len()];
    for i in 0..ensemble.len() {
        let x = ensemble.particle(i);
        let best = (0..modes.len())
            .min_by(|&a, &b| dist_sq(x, &modes[a]).total_cmp(&dist_sq(x, &modes[b])))
            .expect("at least one mode");
        members[best].push(i);
    }
    modes
        .iter()
        .zip(members)
        .map(|(mode, idx)| {
            let n = idx.len();
            let mean = (n > 0).then(|| {
                let mut m = vec![0.0; d];
                for &i in &idx {
                    for (a, v) in m.iter_mut().zip(ensemble.particle(i)) {
                        *a += v;
                    }
                }
                m.iter_mut().for_each(|a| *a /= n as f64);
                m
            });
            let covariance = match (&mean, n >= 2) {
                (Some(m), true) => {
                    let mut c = vec![vec![0.0; d]; d];
                    for &i in &idx {
                        let x = ensemble.particle(i);
                        for r in 0..d {
                            for s in 0..d {
                                c[r][s] += (x[r] - m[r]) * (x[s] - m[s]);
                            }
                        }
                    }
                    c.iter_mut().flatten().for_each(|v| *v /= (n - 1) as f64);
                    Some(c)
                }
                _ => None,
            };
            ModeStats {
                mode: mode.clone(),
                count: n,
                fraction: n as f64 / ensemble.len() as f64,
                mean,
                covariance,
                degenerate: n < 2,
            }
        })
        .collect()
}

/// Run a CBS configuration over its seeds and summarize the final ensembles.
pub fn run_sampling(config: &RunConfig) -> Result<SamplingReport> {
    if !config.method.is_sampling() {
        return Err(Error::InvalidInput(format!("{} is not a sampling method", config.method.as_str())));
    }
    if config.lambda != LambdaMode::Sampling {
        return Err(Error::InvalidInput("sampling runs need lambda = sampling".into()));
    }
    config.validate()?;
    let objective = config.objective()?;
    let stepper = config.stepper_config()?;
    let seeds = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let traj = run(&stepper, config.initial_ensemble(seed)?, &objective, config.steps, seed)?;
            let wall_time = if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
            let last = Ensemble::new(traj.last().positions.clone())?;
            Ok(SamplingSeed {
                seed,
                failed: traj.failed(),
                failure: traj.failure.clone(),
                wall_time,
                modes: if traj.failed() { vec![] } else { partition_by_mode(&last, objective.modes()) },
                final_positions: (!traj.failed()).then(|| last.into_positions()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SamplingReport { config: config.clone(), config_hash: config.hash(), seeds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{KernelName, MethodName};

    #[test]
    fn partition_counts_and_degeneracy() {
        let e = Ensemble::from_rows(&[vec![0.0, 2.1], vec![0.1, 1.9], vec![0.0, 2.0], vec![0.0, -2.0]]).unwrap();
        let stats = partition_by_mode(&e, &[vec![0.0, 2.0], vec![0.0, -2.0]]);
        assert_eq!(stats[0].count, 3);
        assert!(!stats[0].degenerate && stats[1].degenerate);
        assert!(stats[1].covariance.is_none());
        let m = stats[0].mean.as_ref().unwrap();
        assert!((m[0] - 0.1 / 3.0).abs() < 1e-15 && (m[1] - 2.0).abs() < 1e-15);
        let c = stats[0].covariance.as_ref().unwrap();
        assert!((c[1][1] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rejects_optimization_setup() {
        let c = RunConfig { objective: "gaussian-mixture".into(), method: MethodName::PolarizedCbo, ..Default::default() };
        assert!(run_sampling(&c).is_err());
        let c = RunConfig { method: MethodName::PolarizedCbs, ..c };
        assert!(run_sampling(&c).is_err());
    }

    #[test]
    fn small_polarized_run_is_summarized() {
        let c = RunConfig {
            objective: "gaussian-mixture".into(),
            method: MethodName::PolarizedCbs,
            kernel: KernelName::Gaussian,
            kappa: 0.6,
            lambda: LambdaMode::Sampling,
            particles: 60,
            steps: 50,
            seeds: vec![1, 2],
            record_timing: false,
            ..Default::default()
        };
        let r = run_sampling(&c).unwrap();
        assert_eq!(r.seeds.len(), 2);
        for s in &r.seeds {
            assert!(!s.failed);
            assert_eq!(s.modes.iter().map(|m| m.count).sum::<usize>(), 60);
        }
    }
}
