//! Library side of the `ramify` command: polynomial parsing, JSON output and
//! the command implementations.

pub mod commands;
pub mod output;
pub mod parse;

pub use commands::{CliError, Report};
pub use parse::{parse_poly, ParseError};
