//! Batch front end for `singular-plap`: configuration, orchestration and
//! artifact output.

pub mod artifacts;
pub mod commands;
pub mod config;
mod error;
pub mod plot;

pub use commands::{run, Outcome};
pub use config::{Command, NegativeControl, Problem, RunConfig, Seed};
pub use error::{CliError, CliResult};
pub use plot::{emit_plot, render_svg};
