use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid k = {k} for {n} nodes")]
    InvalidK { k: usize, n: usize },

    #[error("nodes {0} and {1} have identical features; inverse-distance weight is undefined")]
    DuplicatePoints(usize, usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("matrix is not symmetric (max |M - M^T| = {0:e})")]
    NotSymmetric(f64),

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("invalid probability {0}; expected a value in (0, 1]")]
    InvalidProbability(f64),

    #[error("invalid signed entry {value} at index {index}; expected -1, 0 or +1")]
    InvalidEntry { index: usize, value: f64 },

    #[error("tape does not match network: {0}")]
    StaleTape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("loss diverged ({what} = {value})")]
    DivergedLoss { what: &'static str, value: f64 },

    #[error("invalid filter decay {0}; expected a finite non-negative value")]
    InvalidDecay(f64),

    #[error("bad magic number {found:#010x}")]
    BadMagic { found: u32 },

    #[error("truncated file: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: usize, found: usize },

    #[error("unsupported IDX element type {0:#04x}")]
    UnsupportedType(u8),

    #[error("degenerate value range: min = max = {0}")]
    DegenerateRange(f64),

    #[error("empty index set for {0}")]
    EmptyIndexSet(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub(crate) fn check_len(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        });
    }
    Ok(())
}
