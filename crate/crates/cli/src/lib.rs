//! Driver for the `kd` command: configuration parsing, experiment dispatch
//! and CSV/manifest/SVG output.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{parse_config, Experiment, FigurePreset, RunConfig, Truncation};
pub use error::{CliError, ConfigError};
pub use run::{execute, run, Artifacts};
