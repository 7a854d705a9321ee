//! Experiment runner and result reporting.

pub mod checks;
pub mod config;
pub mod detect;
pub mod emit;
pub mod presets;
pub mod sampling;
pub mod table;

pub use config::{KernelName, MethodName, RunConfig};
pub use detect::{detect_minima, DEFAULT_THRESHOLD};
pub use emit::{emit_results, Format};
pub use presets::preset;
pub use sampling::{run_sampling, SamplingReport};
pub use table::{run_config, run_seed, run_table, Aggregate, RunReport, SeedResult};
