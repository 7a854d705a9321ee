//! Experiment configuration: one flat record mirroring the CLI flags.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{LambdaMode, Method, StepperConfig};
use crate::ensemble::{BetaSchedule, Ensemble, NoiseKind, NoiseModel};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::objectives::{by_name, Objective};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    StandardCbo,
    PolarizedCbo,
    ClusterCbo,
    StandardCbs,
    PolarizedCbs,
    ProximalCbo,
}

impl MethodName {
    pub const ALL: [MethodName; 6] = [
        MethodName::StandardCbo,
        MethodName::PolarizedCbo,
        MethodName::ClusterCbo,
        MethodName::StandardCbs,
        MethodName::PolarizedCbs,
        MethodName::ProximalCbo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodName::StandardCbo => "standard-cbo",
            MethodName::PolarizedCbo => "polarized-cbo",
            MethodName::ClusterCbo => "cluster-cbo",
            MethodName::StandardCbs => "standard-cbs",
            MethodName::PolarizedCbs => "polarized-cbs",
            MethodName::ProximalCbo => "proximal-cbo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Unknown { kind: "method", name: s.to_string() })
    }

    pub fn is_sampling(&self) -> bool {
        matches!(self, MethodName::StandardCbs | MethodName::PolarizedCbs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelName {
    Gaussian,
    Laplace,
    BoundedConfidence,
    Constant,
}

impl KernelName {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelName::Gaussian => "gaussian",
            KernelName::Laplace => "laplace",
            KernelName::BoundedConfidence => "bounded-confidence",
            KernelName::Constant => "constant",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        [KernelName::Gaussian, KernelName::Laplace, KernelName::BoundedConfidence, KernelName::Constant]
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Unknown { kind: "kernel", name: s.to_string() })
    }
}

/// Floats that may be infinite are written as the strings `"inf"`/`"-inf"`,
/// since JSON has no literal for them.
pub(crate) mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => super::parse_float(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Parse a float, accepting `inf`, `+inf`, `-inf` and `infinity`.
pub fn parse_float(s: &str) -> std::result::Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t.parse::<f64>().map_err(|e| format!("invalid number {s:?}: {e}")),
    }
}

/// Parse a seed list: a count `N` (seeds `0..N`), a range `a..b`, or a
/// comma-separated list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = |e: std::num::ParseIntError| Error::Config(format!("invalid seeds {s:?}: {e}"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        return Ok((a..b).collect());
    }
    if s.contains(',') {
        return s.split(',').map(|t| t.trim().parse().map_err(bad)).collect();
    }
    let n: u64 = s.parse().map_err(bad)?;
    Ok((0..n).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct RunConfig {
    pub objective: String,
    pub dim: usize,
    pub method: MethodName,
    pub kernel: KernelName,
    #[serde(with = "maybe_inf")]
    pub kappa: f64,
    pub beta0: f64,
    pub beta_factor: f64,
    #[serde(with = "maybe_inf")]
    pub beta_max: f64,
    pub sigma: f64,
    pub noise: NoiseKind,
    pub dt: f64,
    pub steps: usize,
    pub particles: usize,
    pub clusters: usize,
    #[serde(with = "maybe_inf")]
    pub alpha: f64,
    pub inner_iterations: usize,
    pub lambda: LambdaMode,
    pub proximal_tol: f64,
    pub init_low: f64,
    pub init_high: f64,
    pub seeds: Vec<u64>,
    pub snapshot_stride: usize,
    pub threshold: f64,
    /// When false, wall times are recorded as zero so output is byte-stable.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            objective: "ackley".into(),
            dim: 2,
            method: MethodName::PolarizedCbo,
            kernel: KernelName::Gaussian,
            kappa: 1.0,
            beta0: 1.0,
            beta_factor: 1.0,
            beta_max: f64::INFINITY,
            sigma: 1.0,
            noise: NoiseKind::Isotropic,
            dt: 0.01,
            steps: 1000,
            particles: 100,
            clusters: 1,
            alpha: 5.0,
            inner_iterations: 1,
            lambda: LambdaMode::Optimization,
            proximal_tol: 1e-10,
            init_low: -3.0,
            init_high: 3.0,
            seeds: (0..20).collect(),
            snapshot_stride: 1,
            threshold: 0.25,
            record_timing: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Ok(serde_json::from_str(&text)?),
            _ => Self::from_toml_str(&text),
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kernel(&self) -> Result<Kernel> {
        let k = match self.kernel {
            KernelName::Constant => return Ok(Kernel::Constant),
            KernelName::Gaussian => Kernel::gaussian(self.kappa),
            KernelName::Laplace => Kernel::laplace(self.kappa),
            KernelName::BoundedConfidence => Kernel::bounded_confidence(self.kappa),
        };
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidInput(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(k)
    }

    pub fn method(&self) -> Method {
        match self.method {
            MethodName::StandardCbo => Method::StandardCbo,
            MethodName::PolarizedCbo => Method::PolarizedCbo,
            MethodName::ClusterCbo => Method::ClusterCbo {
                clusters: self.clusters,
                alpha: self.alpha,
                inner_iterations: self.inner_iterations,
            },
            MethodName::StandardCbs => Method::StandardCbs { lambda: self.lambda },
            MethodName::PolarizedCbs => Method::PolarizedCbs { lambda: self.lambda },
            MethodName::ProximalCbo => Method::Proximal { tol: self.proximal_tol },
        }
    }

    pub fn objective(&self) -> Result<Objective> {
        by_name(&self.objective, self.dim)
    }

    pub fn stepper_config(&self) -> Result<StepperConfig> {
        Ok(StepperConfig {
            dt: self.dt,
            noise: NoiseModel::new(self.noise, self.sigma)?,
            method: self.method(),
            schedule: BetaSchedule::new(self.beta0, self.beta_factor, self.beta_max)?,
            kernel: self.kernel()?,
            snapshot_stride: self.snapshot_stride,
        })
    }

    pub fn initial_ensemble(&self, seed: u64) -> Result<Ensemble> {
        Ensemble::uniform_box(self.particles, self.dim, self.init_low, self.init_high, seed)
    }

    /// Check every field, including consistency with the objective.
    pub fn validate(&self) -> Result<()> {
        let objective = self.objective()?;
        if self.particles == 0 {
            return Err(Error::InvalidInput("particles must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("at least one seed is required".into()));
        }
        if !(self.threshold >= 0.0) {
            return Err(Error::InvalidInput(format!("threshold must be >= 0, got {}", self.threshold)));
        }
        if self.method.is_sampling() {
            if objective.modes().is_empty() {
                return Err(Error::InvalidInput(format!("{} has no modes to sample", objective.name())));
            }
        } else if objective.minimizers().is_empty() {
            return Err(Error::InvalidInput(format!("{} has no known minimizers", objective.name())));
        }
        self.stepper_config()?.validate(&self.initial_ensemble(0)?)
    }

    /// Short SHA-256 digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(&serde_json::to_value(self).expect("config serializes")).expect("value serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}
