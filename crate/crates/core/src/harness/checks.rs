//! Acceptance criteria as runnable checks, shared by the `check` subcommand
//! and the acceptance test target.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterState;
use crate::diagnostics::{lyapunov_decay_rate, stationarity_check, GaussianTarget};
use crate::dynamics::{run, LambdaMode, Method, StepperConfig};
use crate::ensemble::{BetaSchedule, Ensemble, NoiseKind, NoiseModel};
use crate::error::Result;
use crate::harness::config::{MethodName, RunConfig};
use crate::harness::emit::{render, reports_from_json, Format};
use crate::harness::presets::preset;
use crate::harness::table::{run_table, Aggregate, RunReport, SeedResult};
use crate::kernel::{Kernel, LogKernel};
use crate::matrix::Matrix;
use crate::means::{neg_beta_potential, polarized_means, polarized_moments_from};
use crate::objectives::{by_name, Objective};
use crate::rng::RngStream;

/// Stationarity tolerances: standard errors for the mean, relative
/// Frobenius error for the covariance.
pub const STATIONARITY_MAX_Z: f64 = 5.0;
pub const STATIONARITY_MAX_COV: f64 = 0.05;
pub const TABLE1_MIN_GE3: f64 = 0.80;
pub const TABLE2_MIN_GE1: f64 = 0.90;
pub const TABLE2_MIN_GE2: f64 = 0.70;
pub const UNIMODAL_MIN_SUCCESS: f64 = 0.90;
pub const LYAPUNOV_MIN_R2: f64 = 0.95;
pub const LYAPUNOV_NOISY_MIN_SEEDS: usize = 18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    /// False for informational entries that are reported but not enforced.
    pub asserted: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(id: u8, name: &str, result: Result<(bool, String)>) -> Self {
        let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
        Self { id, name: name.to_string(), passed, asserted: true, detail }
    }

    pub fn line(&self) -> String {
        let tag = match (self.asserted, self.passed) {
            (false, _) => "SKIP",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        format!("[{tag}] criterion {}: {} -- {}", self.id, self.name, self.detail)
    }
}

pub const CHECK_IDS: [u8; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

pub fn run_check(id: u8) -> Option<CheckOutcome> {
    Some(match id {
        1 => reduction_equivalence(50, 2024),
        2 => gaussian_stationarity(),
        3 => table1_desk_scale(),
        4 => table2_desk_scale(),
        5 => unimodal_consistency(),
        6 => lyapunov_decay(),
        7 => invariant_suites(),
        8 => exclusions(),
        _ => return None,
    })
}

fn random_objective(rng: &mut RngStream, dim: usize) -> Objective {
    let names = ["ackley", "shifted-ackley", "rastrigin", "multimodal-ackley", "quadratic"];
    let k = (rng.uniform_open() * names.len() as f64) as usize;
    by_name(names[k.min(names.len() - 1)], dim).expect("registry objective")
}

fn random_kernel(rng: &mut RngStream) -> Kernel {
    let kappa = 10f64.powf(rng.uniform_range(-1.0, 1.0));
    match (rng.uniform_open() * 4.0) as usize {
        0 => Kernel::gaussian(kappa),
        1 => Kernel::laplace(kappa),
        2 => Kernel::bounded_confidence(kappa),
        _ => Kernel::Constant,
    }
}

/// Criterion 1: bit-exact reduction of the localized methods to standard CBO.
pub fn reduction_equivalence(n_configs: usize, seed: u64) -> CheckOutcome {
    let body = || -> Result<(bool, String)> {
        let mut rng = RngStream::new(seed, 0);
        let mut mismatches = Vec::new();
        for case in 0..n_configs {
            let dim = 1 + (rng.uniform_open() * 4.0) as usize;
            let j = 2 + (rng.uniform_open() * 30.0) as usize;
            let objective = random_objective(&mut rng, dim);
            let noise = if rng.uniform_open() < 0.5 { NoiseKind::Isotropic } else { NoiseKind::Coordinatewise };
            let beta0 = 10f64.powf(rng.uniform_range(-1.0, 1.5));
            let schedule = BetaSchedule::new(beta0, rng.uniform_range(1.0, 1.05), beta0 * 100.0)?;
            let mut base = StepperConfig::new(
                Method::StandardCbo,
                Kernel::Constant,
                NoiseModel::new(noise, rng.uniform_range(0.0, 2.0))?,
                schedule,
            );
            base.dt = if rng.uniform_open() < 0.5 { 0.01 } else { 0.1 };
            let master = (rng.uniform_open() * 1e9) as u64;
            let ensemble = Ensemble::uniform_box(j, dim, -3.0, 3.0, master)?;
            let steps = 40;
            let reference = run(&base, ensemble.clone(), &objective, steps, master)?;
            let polarized = run(&StepperConfig { method: Method::PolarizedCbo, ..base }, ensemble.clone(), &objective, steps, master)?;
            let alpha = match (rng.uniform_open() * 3.0) as usize {
                0 => 0.0,
                1 => f64::INFINITY,
                _ => rng.uniform_range(0.1, 10.0),
            };
            let cluster_cfg = StepperConfig {
                method: Method::ClusterCbo { clusters: 1, alpha, inner_iterations: 1 },
                kernel: random_kernel(&mut rng),
                ..base
            };
            let cluster = run(&cluster_cfg, ensemble, &objective, steps, master)?;
            if polarized != reference {
                mismatches.push(format!("case {case}: polarized"));
            }
            if cluster != reference {
                mismatches.push(format!("case {case}: cluster"));
            }
        }
        Ok((
            mismatches.is_empty(),
            if mismatches.is_empty() {
                format!("{n_configs} random configs, polarized(constant) and cluster(J_c=1) bit-identical to standard CBO")
            } else {
                format!("mismatches: {}", mismatches.join(", "))
            },
        ))
    };
    CheckOutcome::new(1, "reduction equivalence", body())
}

fn random_spd(rng: &mut RngStream, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.standard_normal());
    &a * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.5
}

/// Criterion 2: polarized moments of samples from a Gaussian target match the
/// closed-form stationary moments.
pub fn gaussian_stationarity() -> CheckOutcome {
    let body = || -> Result<(bool, String)> {
        let mut rng = RngStream::new(7, 1);
        let mut worst_z: f64 = 0.0;
        let mut worst_cov: f64 = 0.0;
        let mut cases = 0;
        for d in [1, 2] {
            for kappa in [0.5, 1.0] {
                for beta in [1.0, 5.0] {
                    let cov = random_spd(&mut rng, d);
                    let mean = DVector::from_fn(d, |_, _| rng.uniform_range(-1.0, 1.0));
                    let l = cov.clone().cholesky().expect("spd").l();
                    let target = GaussianTarget::with_kappa(mean.clone(), cov, kappa)?;
                    let mut q = Vec::new();
                    for _ in 0..5 {
                        let z = DVector::from_fn(d, |_, _| 0.75 * rng.standard_normal());
                        q.push((&mean + &l * z).iter().copied().collect::<Vec<_>>());
                    }
                    let queries = Matrix::from_rows(&q)?;
                    let report = stationarity_check(&target, beta, 100_000, &queries, 1000 + cases)?;
                    for r in &report.queries {
                        worst_z = worst_z.max(r.max_z);
                        worst_cov = worst_cov.max(r.covariance_rel_error);
                    }
                    cases += 1;
                }
            }
        }
        let ok = worst_z <= STATIONARITY_MAX_Z && worst_cov <= STATIONARITY_MAX_COV;
        Ok((ok, format!("{cases} targets x 5 queries: worst mean z = {worst_z:.2} (<= 5), worst covariance rel. error = {worst_cov:.4} (<= 0.05)")))
    };
    CheckOutcome::new(2, "gaussian stationarity", body())
}

fn find<'a>(reports: &'a [RunReport], method: MethodName) -> &'a Aggregate {
    &reports.iter().find(|r| r.config.method == method).expect("preset row").aggregate
}

/// Criterion 3: two-dimensional multimodal Ackley, `J = 200`, `kappa = 0.1`.
pub fn table1_desk_scale() -> CheckOutcome {
    let body = || -> Result<(bool, String)> {
        let mut cfgs = preset("table1-j200")?;
        cfgs.iter_mut().for_each(|c| c.record_timing = false);
        let reports = run_table(&cfgs)?;
        let pol = find(&reports, MethodName::PolarizedCbo);
        let cbo = find(&reports, MethodName::StandardCbo);
        let ok = pol.frac_ge3 >= TABLE1_MIN_GE3 && cbo.frac_ge2 == 0.0 && pol.failed == 0;
        Ok((
            ok,
            format!(
                "polarized >=1/>=2/>=3 = {:.0}%/{:.0}%/{:.0}% (need >=3 >= 80%), CBO >=2 = {:.0}% (need 0%)",
                100.0 * pol.frac_ge1,
                100.0 * pol.frac_ge2,
                100.0 * pol.frac_ge3,
                100.0 * cbo.frac_ge2
            ),
        ))
    };
    CheckOutcome::new(3, "2-d multimodal detection", body())
}

/// Criterion 4: ten-dimensional cluster CBO, `J = 400`, `kappa = 0.1`.
pub fn table2_desk_scale() -> CheckOutcome {
    let body = || -> Result<(bool, String)> {
        let cfgs: Vec<RunConfig> = preset("table2-j400")?
            .into_iter()
            .filter(|c| c.method == MethodName::ClusterCbo)
            .map(|c| RunConfig { record_timing: false, ..c })
            .collect();
        let reports = run_table(&cfgs)?;
        let a = &reports[0].aggregate;
        let ok = a.frac_ge1 >= TABLE2_MIN_GE1 && a.frac_ge2 >= TABLE2_MIN_GE2;
        Ok((
            ok,
            format!(
                "cluster J_c={} >=1/>=2/>=3 = {:.0}%/{:.0}%/{:.0}% (need >=1 >= 90%, >=2 >= 70%)",
                reports[0].config.clusters,
                100.0 * a.frac_ge1,
                100.0 * a.frac_ge2,
                100.0 * a.frac_ge3
            ),
        ))
    };
    CheckOutcome::new(4, "10-d cluster detection", body())
}

/// Criterion 5: both methods find the shifted Ackley minimizer.
pub fn unimodal_consistency() -> CheckOutcome {
    let body = || -> Result<(bool, String)> {
        let mut cfgs = preset("unimodal")?;
        cfgs.iter_mut().for_each(|c| c.record_timing = false);
        let reports = run_table(&cfgs)?;
        let cbo = find(&reports, MethodName::StandardCbo).frac_ge1;
        let pol = find(&reports, MethodName::PolarizedCbo).frac_ge1;
        let ok = cbo >= UNIMODAL_MIN_SUCCESS && pol >= UNIMODAL_MIN_SUCCESS;
        Ok((ok, format!("success standard = {:.0}%, polarized = {:.0}% (need >= 90% each)", 100.0 * cbo, 100.0 * pol)))
    };
    CheckOutcome::new(5, "unimodal consistency", body())
}

/// Quadratic test potential for the Lyapunov checks.
pub fn lyapunov_objective(d: usize) -> Result<Objective> {
    let precision = if d == 1 {
        DMatrix::from_element(1, 1, 1.5)
    } else {
        DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8])
    };
    Objective::quadratic((0..d).map(|n| 0.5 - n as f64).collect(), precision)
}

pub fn lyapunov_config(sigma: f64) -> StepperConfig {
    let mut c = StepperConfig::new(Method::Proximal { tol: 1e-10 }, Kernel::gaussian(1.0), NoiseModel::isotropic(sigma), BetaSchedule::constant(1.0));
    c.dt = 0.01;
    c.snapshot_stride = 20;
    c
}

/// Criterion 6: exponential decay of the Lyapunov functional.
pub fn lyapunov_decay() -> CheckOutcome {
    let body = || -> Result<(bool, String)> {
        let mut parts = Vec::new();
        let mut ok = true;
        for d in [1, 2] {
            let o = lyapunov_objective(d)?;
            let t = run(&lyapunov_config(0.0), Ensemble::uniform_box(20, d, -3.0, 3.0, 1)?, &o, 2000, 1)?;
            let f = lyapunov_decay_rate(&t, &o, 1.0)?;
            ok &= f.rate < 0.0 && f.r_squared >= LYAPUNOV_MIN_R2;
            parts.push(format!("d={d} sigma=0: rate {:.4}, R^2 {:.4}", f.rate, f.r_squared));
        }
        let o = lyapunov_objective(2)?;
        let mut negative = 0;
        for seed in 0..20u64 {
            let t = run(&lyapunov_config(0.05), Ensemble::uniform_box(20, 2, -3.0, 3.0, seed)?, &o, 2000, seed)?;
            if lyapunov_decay_rate(&t, &o, 1.0)?.rate < 0.0 {
                negative += 1;
            }
        }
        ok &= negative >= LYAPUNOV_NOISY_MIN_SEEDS;
        parts.push(format!("sigma=0.05: negative slope in {negative}/20 seeds (need >= 18)"));
        Ok((ok, parts.join("; ")))
    };
    CheckOutcome::new(6, "lyapunov decay", body())
}

/// Criterion 7: structural invariants over randomized inputs.
pub fn invariant_suites() -> CheckOutcome {
    let body = || -> Result<(bool, String)> {
        let mut rng = RngStream::new(99, 3);
        let mut failures: Vec<String> = Vec::new();
        let mut counts = [0usize; 6];

        for _ in 0..200 {
            let d = 1 + (rng.uniform_open() * 3.0) as usize;
            let x: Vec<f64> = (0..d).map(|_| rng.uniform_range(-4.0, 4.0)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.uniform_range(-4.0, 4.0)).collect();
            let k = random_kernel(&mut rng);
            if k.log_eval_unchecked(&x, &x) != 0.0 || k.log_eval_unchecked(&x, &y) != k.log_eval_unchecked(&y, &x) {
                failures.push(format!("kernel {k}"));
            }
            counts[0] += 1;
        }

        for case in 0..20u64 {
            let d = 1 + (case % 3) as usize;
            let j = 10 + (rng.uniform_open() * 30.0) as usize;
            let e = Ensemble::uniform_box(j, d, -3.0, 3.0, case)?;
            let o = random_objective(&mut rng, d);
            let nbv = neg_beta_potential(&e, &o, 5.0);
            let kernel = random_kernel(&mut rng);
            let jc = 1 + (rng.uniform_open() * 5.0) as usize;
            let mut state = ClusterState::init_random(&e, &nbv, jc, 5.0, case)?;
            for _ in 0..10 {
                state.step(&e, &kernel, &nbv, 1);
                for i in 0..j {
                    let row = state.probs.row(i);
                    if row.iter().any(|&p| !(p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                        failures.push(format!("cluster row {i} of case {case}"));
                    }
                }
                counts[1] += 1;
            }

            let (means, covs) = polarized_moments_from(&e, &kernel, &nbv);
            for c in &covs {
                let scale = c.abs().max().max(1.0);
                if c.clone().symmetric_eigen().eigenvalues.min() < -1e-12 * scale {
                    failures.push(format!("covariance of case {case}"));
                }
                counts[2] += 1;
            }
            let (lo, hi) = e.positions().bounding_box();
            let pm = polarized_means(&e, &kernel, &o, 5.0);
            for m in pm.row_iter().chain(means.row_iter()) {
                if m.iter().enumerate().any(|(n, v)| *v < lo[n] - 1e-12 || *v > hi[n] + 1e-12) {
                    failures.push(format!("mean outside hull in case {case}"));
                }
                counts[3] += 1;
            }
        }

        for _ in 0..200 {
            let seeds: Vec<SeedResult> = (0..10)
                .map(|s| {
                    let n = (rng.uniform_open() * 4.0) as usize;
                    SeedResult { seed: s, final_means: None, detected: (0..n).collect(), wall_time: 0.0, failed: rng.uniform_open() < 0.1, failure: None }
                })
                .collect();
            let a = Aggregate::from_seeds(&seeds);
            if !(a.frac_ge1 >= a.frac_ge2 && a.frac_ge2 >= a.frac_ge3) {
                failures.push("detection counts not monotone".into());
            }
            counts[4] += 1;
        }

        let cfg = RunConfig {
            objective: "multimodal-ackley".into(),
            particles: 20,
            steps: 30,
            seeds: vec![1, 2],
            record_timing: false,
            ..Default::default()
        };
        let target = by_name("gaussian-mixture", 2)?;
        let lambda = LambdaMode::Sampling;
        let standard = StepperConfig::new(Method::StandardCbs { lambda }, Kernel::Constant, NoiseModel::isotropic(1.0), BetaSchedule::constant(1.0));
        let polarized = StepperConfig { method: Method::PolarizedCbs { lambda }, ..standard };
        let e = Ensemble::uniform_box(25, 2, -3.0, 3.0, 4)?;
        if run(&standard, e.clone(), &target, 30, 4)? != run(&polarized, e, &target, 30, 4)? {
            failures.push("polarized CBS with constant kernel differs from standard CBS".into());
        }
        let first = run_table(std::slice::from_ref(&cfg))?;
        let second = run_table(std::slice::from_ref(&cfg))?;
        for f in [Format::Csv, Format::Json, Format::Markdown] {
            if render(&first, f)? != render(&second, f)? {
                failures.push(format!("{f:?} output not byte-stable"));
            }
            counts[5] += 1;
        }
        if reports_from_json(&render(&first, Format::Json)?)? != first {
            failures.push("json round trip".into());
        }

        Ok((
            failures.is_empty(),
            if failures.is_empty() {
                format!(
                    "kernel pairs {}, cluster steps {}, covariances {}, means {}, aggregates {}, emit formats {}: zero failures",
                    counts[0], counts[1], counts[2], counts[3], counts[4], counts[5]
                )
            } else {
                format!("{} failures, first: {}", failures.len(), failures[0])
            },
        ))
    };
    CheckOutcome::new(7, "invariant suites", body())
}

/// Criterion 8: items that are reported but not quantitatively asserted.
pub fn exclusions() -> CheckOutcome {
    CheckOutcome {
        id: 8,
        name: "exclusions".into(),
        passed: true,
        asserted: false,
        detail: "not asserted: d=30 table (opt-in preset `table3`), banana-density figure, Fokker-Planck level claims".into(),
    }
}
