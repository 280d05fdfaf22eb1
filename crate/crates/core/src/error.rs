use thiserror::Error;

/// Errors raised by the arithmetic, path and statistics layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("{value} is not invertible modulo {modulus}{}", index.map(|i| format!(" (index {i})")).unwrap_or_default())]
    NotInvertible {
        value: u64,
        modulus: u64,
        index: Option<usize>,
    },

    #[error("{value} is not coprime to {p}")]
    NotCoprime { value: u64, p: u64 },

    #[error("p-adic square-root series needs p >= 2n-5 (p = {p}, n = {n})")]
    PrecisionUnsupported { p: u64, n: u32 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("shift pattern has two shifts congruent modulo p")]
    PatternCollision,

    #[error("the zero polynomial has every residue as a root")]
    DegeneratePolynomial,
}

pub type Result<T> = std::result::Result<T, Error>;
