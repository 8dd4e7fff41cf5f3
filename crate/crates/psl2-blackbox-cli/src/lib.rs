//! The `psl2bb` command line driver.
//!
//! Exit codes: 0 success, 1 usage or validation failure, 2 Monte-Carlo budget exhausted.
//! Every flag can also be set through an environment variable with the prefix
//! `PSL2BB_`, for example `PSL2BB_SEED=7`.

pub mod bench;
pub mod commands;

pub use commands::{run, Cli, CliError, Command};
