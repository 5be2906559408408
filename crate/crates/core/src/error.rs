//! Error taxonomy shared across the simulator.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid geometry, timing, or energy configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Out-of-range or otherwise malformed row/bank address.
    #[error("address error: {0}")]
    Address(String),

    /// Command issued in a state that forbids it (open bank, duplicate
    /// operands, indeterminate charge share).
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Trace or config text could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Kernel compilation or execution failure.
    #[error("kernel error: {0}")]
    Kernel(String),

    /// A command inside a trace failed; carries the zero-based index.
    #[error("command {index} failed: {source}")]
    AtCommand {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Costing was handed an inconsistent event stream.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn at_command(index: usize, source: Error) -> Self {
        Error::AtCommand {
            index,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
