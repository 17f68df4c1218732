//! Command-line front end for `ridgesplit-core`: configuration, metric
//! sweeps, moment verification and figure reproduction.

pub mod app;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
pub mod svg;
pub mod sweep;
pub mod verify;

pub use app::run;
pub use config::{ExperimentConfig, PGrid, SmoothingWindow};
pub use error::{CliError, Result};
pub use sweep::{run_sweep, SweepOutput};
pub use verify::{verify_moments, VerifyOptions, VerifyReport};
