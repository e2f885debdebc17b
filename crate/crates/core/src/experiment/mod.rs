//! Configuration, sweeps, CSV artifacts and presets behind the CLI.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{parse_config, parse_engines, Axes, Engine, ExperimentSpec};
pub use presets::{figure_spec, validate_spec, Figure};
pub use run::{format_number, run_experiment, write_artifacts, ExperimentOutput, Issue, Row, Status, CSV_HEADER};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FDRELAY_OUT_DIR";
