//! Driver library for the `sbfem` binary: study configuration, convergence
//! runs with rate estimation, CSV/plot-data emission, and property suites.

pub mod config;
pub mod error;
pub mod study;
pub mod verify;

pub use config::{ConfigOverrides, ProblemKind, StudyConfig};
pub use error::{CliError, Result};
pub use study::{
    builtin_case, emit_csv, emit_plot_data, estimate_rates, format_csv, parse_csv, run_study,
    ConvergenceRecord, ErrorNorm, RateFit, StudyOutcome, CSV_HEADER,
};
