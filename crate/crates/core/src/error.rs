use thiserror::Error;

/// Errors raised by grid construction, norm solvers and operators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("exponent field violates 1 < p_- <= p_+ < inf (p_- = {p_minus}, p_+ = {p_plus})")]
    InvalidExponent { p_minus: f64, p_plus: f64 },

    #[error("cube window (start {start:?}, side {side}) does not fit the grid")]
    WindowOutOfBounds { start: Vec<usize>, side: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("kernel is not odd")]
    KernelNotOdd,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("dense assembly of {cells} cells exceeds the cap of {cap}")]
    AssemblyCap { cells: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
