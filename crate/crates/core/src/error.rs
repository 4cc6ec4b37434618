use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular cell: {0}")]
    SingularCell(String),

    #[error("quadrature did not converge: requested tolerance {requested:e}, achieved {achieved:e}")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("not a Lévy measure: {0}")]
    NotLevy(String),

    #[error("not grid-compatible; apply grid_normalize: {0}")]
    NotGridCompatible(String),

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("CFL violation: dt = {dt:e} exceeds the monotonicity bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("mollify the nonlinearity first: its Lipschitz bound on [-{range}, {range}] is infinite")]
    InfiniteLipschitz { range: f64 },

    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
