use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("mode {mode} produced non-finite dynamics at x = {x:?}")]
    NumericalDomain { mode: usize, x: Vec<f64> },

    #[error("timestep {dt:e} violates the CFL bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-finite value in mode {mode} at t = {time}")]
    NonFinite { time: f64, mode: usize },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("model has dimension {model} but the grid has {grid}")]
    DimensionMismatch { model: usize, grid: usize },

    #[error("unsupported result file version: found {found}, expected {expected}")]
    Version { found: String, expected: String },

    #[error("result file truncated: {0}")]
    Truncated(String),

    #[error("result file checksum mismatch: stored {stored:016x}, computed {computed:016x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("malformed result file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for numerical or model-validity failures,
    /// 1 for everything caused by the invocation or its inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalDomain { .. } | Error::InvalidModel(_) | Error::NonFinite { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
