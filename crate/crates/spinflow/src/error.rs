//! Error types shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("unsupported spin number {0} (only 1/2 and 1 are implemented)")]
    UnsupportedSpin(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("operator is not Hermitian (max |M - M†| element = {0:.3e})")]
    NotHermitian(f64),

    #[error("hyperfine frame is degenerate (zero quantization axis)")]
    DegenerateFrame,

    #[error("no matching field in bracket: residual spans [{min:.3e}, {max:.3e}] Hz without sign change")]
    NoMatchingField { min: f64, max: f64 },

    #[error("dimension {dim} exceeds cap {cap}; use the trajectory or effective solvers")]
    DimensionCap { dim: usize, cap: usize },

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("steady state is not unique (kernel dimension {kernel_dim}); supply an initial state")]
    MultipleSteadyStates { kernel_dim: usize },

    #[error("steady-state iteration did not converge: residual {residual:.3e} at t = {t:.3e} s")]
    SteadyStateNotConverged { residual: f64, t: f64 },

    #[error("linear algebra backend error: {0}")]
    Linalg(String),

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("zero-norm state after jump (operator `{0}`)")]
    ZeroNormJump(String),

    #[error("step size underflow at t = {0:.6e} s")]
    StepUnderflow(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("unit error for key `{key}`: {msg}")]
    Unit { key: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
