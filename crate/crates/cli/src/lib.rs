//! Figure scripts: parsing, execution and the command-line front end.

pub mod run;
pub mod script;

use std::io;

use thiserror::Error;

use cyclekit::figure::FigureError;
use cyclekit::render::RenderError;
use cyclekit::symkern::zero::DEFAULT_BITS;
use cyclekit::symkern::Probe;

pub use run::{Outcome, Runner};
pub use script::{parse_script, Statement};

pub const PRECISION_ENV: &str = "CYCLEKIT_PRECISION_BITS";
pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<CliError> },
    #[error("'{label}': {source}")]
    Node { label: String, source: FigureError },
    #[error("no figure yet: start the script with 'figure <sigma> <sigma_cycle>' or 'load <file>'")]
    NoFigure,
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Figure(#[from] FigureError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Serve(#[from] cyclekit_service::ServeError),
}

/// Precision from the environment, falling back to the default.
pub fn precision_bits(var: Option<&str>) -> Result<u32, CliError> {
    match var {
        None => Ok(DEFAULT_BITS),
        Some(v) => v
            .trim()
            .parse::<u32>()
            .ok()
            .filter(|b| (16..=4096).contains(b))
            .ok_or_else(|| CliError::Usage(format!("{PRECISION_ENV} must be an integer in 16..=4096, got '{v}'"))),
    }
}

pub fn probe(seed: Option<u64>, bits: u32) -> Probe {
    Probe::new(seed.unwrap_or(DEFAULT_SEED), bits)
}
