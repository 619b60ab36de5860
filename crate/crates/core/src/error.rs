use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the gamma function: {0}")]
    Pole(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    #[error("integrand is not finite at node {index}")]
    NonFinite { index: usize },

    #[error("node budget exceeded: {requested} nodes requested, limit {limit}")]
    Resource { requested: usize, limit: usize },

    #[error("exponent q = {0} is an integer; use the odd-integer route")]
    NonIntegerViolation(f64),

    #[error("iterated Laplacian is not a function on the sphere: {0}")]
    Singularity(String),

    #[error("parity mismatch: {0}")]
    Parity(String),

    #[error("too many sign vectors: dimension {0} exceeds 24")]
    Overflow(usize),

    #[error("sampling box is degenerate: {0}")]
    DegenerateBox(String),

    #[error("density is not affine in lambda: deviation {0:e}")]
    NonAffine(f64),

    #[error("scan budget exceeded: {0}")]
    ScanBudget(String),

    #[error("q and n are both odd; the representation may carry a part supported at the origin")]
    UnsupportedParity,

    #[error("q = {0} is an even integer; the representation is not unique")]
    EvenIntegerQ(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures caused by invalid input rather than by a numerical method.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Convergence(_) | Error::Singularity(_) | Error::NonAffine(_) | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
