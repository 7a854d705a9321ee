//! Seed sweeps and success-rate aggregation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run, Trajectory};
use crate::error::Result;
use crate::harness::config::RunConfig;
use crate::harness::detect::detect_minima;
use crate::matrix::Matrix;

/// Description of the detection rule written into every report.
pub const DETECTION_RULE: &str = "final-iterate means, infinity-norm radius";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Absent when the run failed.
    pub final_means: Option<Matrix>,
    pub detected: Vec<usize>,
    pub wall_time: f64,
    pub failed: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub seeds: usize,
    pub failed: usize,
    /// Fraction of all seeds detecting at least k minimizers.
    /// Failed runs count as detecting none.
    pub frac_ge1: f64,
    pub frac_ge2: f64,
    pub frac_ge3: f64,
    pub mean_wall_time: f64,
}

impl Aggregate {
    pub fn from_seeds(seeds: &[SeedResult]) -> Self {
        let n = seeds.len();
        let frac = |k: usize| {
            if n == 0 {
                0.0
            } else {
                seeds.iter().filter(|s| !s.failed && s.detected.len() >= k).count() as f64 / n as f64
            }
        };
        let mean_wall_time = if n == 0 { 0.0 } else { seeds.iter().map(|s| s.wall_time).sum::<f64>() / n as f64 };
        Self {
            seeds: n,
            failed: seeds.iter().filter(|s| s.failed).count(),
            frac_ge1: frac(1),
            frac_ge2: frac(2),
            frac_ge3: frac(3),
            mean_wall_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub config_hash: String,
    pub detection_rule: String,
    pub minimizers: Vec<Vec<f64>>,
    pub seeds: Vec<SeedResult>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn any_failed(&self) -> bool {
        self.aggregate.failed > 0
    }
}

/// Run one seed of a validated configuration.
pub fn run_seed(config: &RunConfig, seed: u64) -> Result<(SeedResult, Trajectory)> {
    let objective = config.objective()?;
    let stepper = config.stepper_config()?;
    let start = Instant::now();
    let traj = run(&stepper, config.initial_ensemble(seed)?, &objective, config.steps, seed)?;
    let wall_time = if config.record_timing { start.elapsed().as_secs_f64() } else { 0.0 };
    let result = if traj.failed() {
        SeedResult { seed, final_means: None, detected: vec![], wall_time, failed: true, failure: traj.failure.clone() }
    } else {
        let means = traj.final_means().clone();
        let detected = detect_minima(&means, objective.minimizers(), config.threshold)?;
        SeedResult { seed, final_means: Some(means), detected, wall_time, failed: false, failure: None }
    };
    Ok((result, traj))
}

fn report(config: &RunConfig, seeds: Vec<SeedResult>) -> Result<RunReport> {
    Ok(RunReport {
        config: config.clone(),
        config_hash: config.hash(),
        detection_rule: DETECTION_RULE.to_string(),
        minimizers: config.objective()?.minimizers().to_vec(),
        aggregate: Aggregate::from_seeds(&seeds),
        seeds,
    })
}

pub fn run_config(config: &RunConfig) -> Result<RunReport> {
    Ok(run_table(std::slice::from_ref(config))?.remove(0))
}

/// Run every `(config, seed)` cell in parallel and aggregate per config in
/// input order.
pub fn run_table(configs: &[RunConfig]) -> Result<Vec<RunReport>> {
    for c in configs {
        c.validate()?;
    }
    let cells: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(k, c)| c.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let results: Vec<SeedResult> = cells
        .par_iter()
        .map(|&(k, s)| run_seed(&configs[k], s).map(|r| r.0))
        .collect::<Result<_>>()?;
    let mut it = results.into_iter();
    configs
        .iter()
        .map(|c| report(c, it.by_ref().take(c.seeds.len()).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{KernelName, MethodName};

    fn small(method: MethodName) -> RunConfig {
        RunConfig {
            objective: "multimodal-ackley".into(),
            method,
            kernel: if method == MethodName::StandardCbo { KernelName::Constant } else { KernelName::Gaussian },
            kappa: 0.5,
            particles: 30,
            steps: 60,
            seeds: vec![3, 4, 5],
            record_timing: false,
            ..Default::default()
        }
    }

    fn seed(detected: Vec<usize>, failed: bool) -> SeedResult {
        SeedResult { seed: 0, final_means: None, detected, wall_time: 1.0, failed, failure: None }
    }

    #[test]
    fn aggregate_counts() {
        let a = Aggregate::from_seeds(&[seed(vec![0, 1, 2], false), seed(vec![1], false), seed(vec![], false), seed(vec![0, 1], true)]);
        assert_eq!((a.seeds, a.failed), (4, 1));
        assert_eq!((a.frac_ge1, a.frac_ge2, a.frac_ge3), (0.5, 0.25, 0.25));
        assert_eq!(a.mean_wall_time, 1.0);
        let all_at_one = Aggregate::from_seeds(&vec![seed(vec![0], false); 5]);
        assert_eq!((all_at_one.frac_ge1, all_at_one.frac_ge2, all_at_one.frac_ge3), (1.0, 0.0, 0.0));
    }

    #[test]
    fn seed_isolation() {
        let c = small(MethodName::PolarizedCbo);
        let full = run_config(&c).unwrap();
        let drop = RunConfig { seeds: vec![3, 5], ..c.clone() };
        let partial = run_config(&drop).unwrap();
        assert_eq!(partial.seeds[0], full.seeds[0]);
        assert_eq!(partial.seeds[1], full.seeds[2]);
    }

    #[test]
    fn table_order_and_cbo_control() {
        let cfgs = vec![small(MethodName::StandardCbo), small(MethodName::PolarizedCbo)];
        let reports = run_table(&cfgs).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].config, cfgs[0]);
        assert_eq!(reports[0].aggregate.frac_ge2, 0.0);
        for r in &reports {
            let a = r.aggregate;
            assert!(a.frac_ge1 >= a.frac_ge2 && a.frac_ge2 >= a.frac_ge3);
            assert_eq!(r.seeds.iter().map(|s| s.seed).collect::<Vec<_>>(), vec![3, 4, 5]);
        }
    }

    #[test]
    fn invalid_config_is_rejected_upfront() {
        let c = RunConfig { particles: 0, ..small(MethodName::PolarizedCbo) };
        assert!(run_table(&[c]).is_err());
    }
}
