use thiserror::Error;

#[derive(Debug, Error)]
pub enum CbfError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} samples per axis, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("unsupported absorption exponent r = {0}; supported set is {{1, 2, 3}}")]
    UnsupportedExponent(u32),

    #[error("time step {dt:.3e} exceeds the stability bound {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CbfError>;
