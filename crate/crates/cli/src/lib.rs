//! Library half of the `rydsim` command-line tool: configuration, scenario
//! dispatch, thread-pool execution, run directories and plotting.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod plot;
pub mod pool;
pub mod scenarios;

pub use config::{load_config, ConfigError, ScenarioConfig, ScenarioName};
pub use pool::PoolRunner;
pub use scenarios::{run_scenario, ScenarioOutput};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    /// Output could not be written, or another unexpected failure.
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERIC: u8 = 3;
}
