use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("cannot compose a loss stage with an amplifier stage")]
    KindMismatch,

    #[error("invalid line geometry: {0}")]
    Geometry(String),

    #[error("invalid encoding: {0}")]
    Encoding(String),

    #[error("degenerate encoding: {0}")]
    DegenerateEncoding(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error {error:e})"
    )]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("Fock truncation insufficient: tail mass {tail:e} beyond n = {n_max}")]
    Truncation { n_max: usize, tail: f64 },

    #[error("summation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
