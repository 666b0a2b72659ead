//! Run configuration, mode dispatch and artifact writing for the
//! `guidedplan` command.

pub mod config;
pub mod run;

pub use config::{ConfigError, Domain, RunConfig};
pub use run::{
    eval_seeds, load_config, metrics_row, oracle_check, run, Mode, OracleRow, RunOptions, RunReport, CURVES_HEADER,
    METRICS_HEADER, ORACLE_HEADER,
};
