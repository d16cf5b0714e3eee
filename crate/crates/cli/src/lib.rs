//! Command-line front end for the low-Mach solver: configuration parsing,
//! single runs and convergence studies with CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod driver;
pub mod output;

pub use config::{parse_config_file, ConfigError, RunArgs, RunConfig};
pub use driver::{
    eoc_study, prepare, run_eoc, run_single, simulate, CliError, EocConfig, EXIT_BLOW_UP,
    EXIT_FAILURE, EXIT_OK,
};
