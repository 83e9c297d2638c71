use std::fmt;

use thiserror::Error;

/// A single rejected input row, reported with its 1-based file line.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{0}")]
    Row(RowError),

    #[error("order id format error: {0:?} is not a 17-digit numeric string")]
    OrderIdFormat(String),

    #[error("bounds error: {0}")]
    Bounds(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("isolated vertex {0:?} has zero degree")]
    IsolatedVertex(String),

    #[error("graph is disconnected into {} components: {}", .0.len(), format_components(.0))]
    Disconnected(Vec<Vec<String>>),

    #[error("numeric error: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by graph structure rather than bad input.
    pub fn is_degeneracy(&self) -> bool {
        matches!(self, Error::IsolatedVertex(_) | Error::Disconnected(_))
    }
}

fn format_components(components: &[Vec<String>]) -> String {
    components
        .iter()
        .map(|c| {
            if c.len() <= 5 {
                format!("{{{}}}", c.join(","))
            } else {
                format!("{{{},... ({} vertices)}}", c[..5].join(","), c.len())
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub type Result<T> = std::result::Result<T, Error>;
