//! Polarized consensus-based optimization and sampling.
//!
//! Particles drift toward kernel-localized Gibbs-weighted means of the
//! ensemble, so separate groups of particles can settle on separate global
//! minimizers of a non-convex objective, or on separate modes of a target
//! density.
//!
//! ```
//! use polarcbo::{run, BetaSchedule, Ensemble, Kernel, Method, NoiseModel, Objective, StepperConfig};
//!
//! let objective = Objective::ackley(2).unwrap();
//! let ensemble = Ensemble::uniform_box(50, 2, -3.0, 3.0, 1).unwrap();
//! let config = StepperConfig::new(
//!     Method::PolarizedCbo,
//!     Kernel::gaussian(1.0),
//!     NoiseModel::isotropic(1.0),
//!     BetaSchedule::constant(1.0),
//! );
//! let trajectory = run(&config, ensemble, &objective, 100, 7).unwrap();
//! assert!(!trajectory.failed());
//! ```

pub mod cluster;
pub mod diagnostics;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod matrix;
pub mod means;
pub mod objectives;
pub mod prox;
pub mod rng;

pub use cluster::{cluster_step, ClusterState, StepEvents};
pub use dynamics::{cbo_step, cbs_step, lambda_for, run, LambdaMode, Method, Snapshot, Stepper, StepperConfig, Trajectory};
pub use ensemble::{BetaSchedule, Ensemble, NoiseKind, NoiseModel};
pub use error::{Error, Result};
pub use kernel::{Kernel, LogKernel};
pub use matrix::Matrix;
pub use objectives::Objective;
pub use rng::RngStream;
