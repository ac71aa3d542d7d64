//! Model files, reports and the command line for the `tpda_core` checker.

pub mod commands;
pub mod dsl;
pub mod region_text;
pub mod report;

pub use commands::CliError;
pub use dsl::{parse_model, render, Model, ParseError};
pub use report::Report;
