//! Named experiment catalogs.

use crate::dynamics::LambdaMode;
use crate::ensemble::NoiseKind;
use crate::error::{Error, Result};
use crate::harness::config::{KernelName, MethodName, RunConfig};

/// Cluster count used by the ten-dimensional cluster rows.
pub const TABLE2_CLUSTERS: usize = 15;

/// Initialization box half-width for the high-dimensional rows.
pub const HIGH_DIM_BOX: f64 = 5.0;

pub const PRESETS: &[&str] = &["table1", "table1-j200", "table2", "table2-j400", "table3", "unimodal", "rastrigin", "sampling"];

fn kernel_row(base: &RunConfig, method: MethodName, kappa: f64) -> RunConfig {
    let (kernel, kappa) = if kappa.is_infinite() { (KernelName::Constant, f64::INFINITY) } else { (KernelName::Gaussian, kappa) };
    RunConfig { method, kernel, kappa, ..base.clone() }
}

fn cbo_row(base: &RunConfig) -> RunConfig {
    kernel_row(base, MethodName::StandardCbo, f64::INFINITY)
}

/// Two-dimensional multimodal Ackley, isotropic noise, fixed `beta = 1`.
pub fn table1_base(particles: usize) -> RunConfig {
    RunConfig {
        objective: "multimodal-ackley".into(),
        dim: 2,
        sigma: 1.0,
        noise: NoiseKind::Isotropic,
        beta0: 1.0,
        beta_factor: 1.0,
        beta_max: 1.0,
        dt: 0.01,
        steps: 1000,
        particles,
        seeds: (0..20).collect(),
        ..Default::default()
    }
}

/// Multimodal Ackley in `dim` dimensions with coordinate-wise noise and the
/// geometric `beta` schedule.
pub fn high_dim_base(dim: usize, particles: usize) -> RunConfig {
    RunConfig {
        objective: "multimodal-ackley".into(),
        dim,
        sigma: 7.5,
        noise: NoiseKind::Coordinatewise,
        beta0: 30.0,
        beta_factor: 1.01,
        beta_max: 1e7,
        alpha: 5.0,
        clusters: TABLE2_CLUSTERS,
        init_low: -HIGH_DIM_BOX,
        init_high: HIGH_DIM_BOX,
        dt: 0.01,
        steps: 1000,
        particles,
        seeds: (0..20).collect(),
        ..Default::default()
    }
}

fn cluster_row(base: &RunConfig, kappa: f64) -> RunConfig {
    kernel_row(base, MethodName::ClusterCbo, kappa)
}

pub fn preset(name: &str) -> Result<Vec<RunConfig>> {
    let mut out = Vec::new();
    match name {
        "table1" => {
            for j in [25, 50, 100, 200] {
                let base = table1_base(j);
                for kappa in [0.1, 0.5, 1.0] {
                    out.push(kernel_row(&base, MethodName::PolarizedCbo, kappa));
                }
                out.push(cbo_row(&base));
            }
        }
        "table1-j200" => {
            let base = table1_base(200);
            out.push(kernel_row(&base, MethodName::PolarizedCbo, 0.1));
            out.push(cbo_row(&base));
        }
        "table2" => {
            for j in [50, 100, 200, 400] {
                let base = high_dim_base(10, j);
                for kappa in [0.001, 0.01, 0.1] {
                    out.push(kernel_row(&base, MethodName::PolarizedCbo, kappa));
                }
                out.push(cbo_row(&base));
                for kappa in [1e-7, 0.1, f64::INFINITY] {
                    out.push(cluster_row(&base, kappa));
                }
            }
        }
        "table2-j400" => {
            let base = high_dim_base(10, 400);
            out.push(cluster_row(&base, 0.1));
            out.push(cbo_row(&base));
        }
        "table3" => {
            for j in [200, 400, 800, 1600] {
                let base = RunConfig { clusters: TABLE2_CLUSTERS, ..high_dim_base(30, j) };
                for kappa in [0.01, 0.1, 1.0, 10.0, 100.0, f64::INFINITY] {
                    out.push(cluster_row(&base, kappa));
                }
            }
        }
        "unimodal" => {
            let base = RunConfig {
                objective: "shifted-ackley".into(),
                dim: 2,
                sigma: 1.0,
                beta0: 1.0,
                beta_max: 1.0,
                init_low: -5.0,
                init_high: 5.0,
                particles: 100,
                steps: 1000,
                seeds: (0..20).collect(),
                ..Default::default()
            };
            out.push(cbo_row(&base));
            out.push(kernel_row(&base, MethodName::PolarizedCbo, 1.0));
        }
        "rastrigin" => {
            let base = RunConfig {
                objective: "rastrigin3".into(),
                dim: 2,
                method: MethodName::PolarizedCbo,
                sigma: 1.0,
                beta0: 1.0,
                beta_max: 1.0,
                particles: 300,
                steps: 1000,
                init_low: -5.0,
                init_high: 5.0,
                seeds: (0..10).collect(),
                ..Default::default()
            };
            out.push(RunConfig { kernel: KernelName::Gaussian, kappa: 0.5, ..base.clone() });
            out.push(RunConfig { kernel: KernelName::Laplace, kappa: 0.05, ..base.clone() });
            out.push(RunConfig { kernel: KernelName::BoundedConfidence, kappa: 2.0, ..base });
        }
        "sampling" => {
            for objective in ["gaussian-mixture", "gaussian-mixture-close"] {
                let base = RunConfig {
                    objective: objective.into(),
                    dim: 2,
                    lambda: LambdaMode::Sampling,
                    beta0: 1.0,
                    beta_max: 1.0,
                    particles: 400,
                    steps: 1000,
                    init_low: -4.0,
                    init_high: 4.0,
                    seeds: (0..5).collect(),
                    ..Default::default()
                };
                out.push(RunConfig { method: MethodName::StandardCbs, kernel: KernelName::Constant, kappa: f64::INFINITY, ..base.clone() });
                for kappa in [0.8, 0.6, 0.4] {
                    out.push(RunConfig { method: MethodName::PolarizedCbs, kernel: KernelName::Gaussian, kappa, ..base.clone() });
                }
            }
        }
        _ => return Err(Error::Unknown { kind: "preset", name: name.to_string() }),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            let cfgs = preset(name).unwrap();
            assert!(!cfgs.is_empty());
            for c in cfgs {
                c.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            }
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn table_cells_carry_the_published_hyperparameters() {
        let t2 = preset("table2-j400").unwrap();
        let c = &t2[0];
        assert_eq!((c.dim, c.particles, c.sigma, c.noise), (10, 400, 7.5, NoiseKind::Coordinatewise));
        assert_eq!((c.beta0, c.beta_factor, c.beta_max, c.alpha, c.kappa), (30.0, 1.01, 1e7, 5.0, 0.1));
        let t1 = preset("table1").unwrap();
        assert_eq!(t1.len(), 16);
        assert!(t1.iter().all(|c| c.dim == 2 && c.sigma == 1.0 && c.beta0 == 1.0 && c.steps == 1000));
    }
}
