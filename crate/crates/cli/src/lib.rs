//! Command-line surface of the `kuragap` library: configuration, command
//! runners, output writers and the acceptance suite.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod verify;

pub use config::{parse_config, CommandName, ConfigError, Format, Job, RunConfig};
pub use output::{render, Report};
