use thiserror::Error;

/// Errors raised by the arithmetic and crystal layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),

    #[error("{0} is not a prime")]
    InvalidPrime(u32),

    #[error("elements belong to different local fields")]
    FieldMismatch,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("polynomial is not monic")]
    NotMonic,

    #[error("polynomial is not Eisenstein: {0}")]
    NotEisenstein(String),

    #[error("division by an element indistinguishable from zero")]
    ZeroDivisor,

    #[error("coefficient has negative valuation, cannot reduce modulo the maximal ideal")]
    NotIntegral,

    #[error("substituted series must have zero constant term")]
    NonzeroConstantTerm,

    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),

    #[error("precision exhausted: dividing by {degree}! costs {needed} digits but the margin is {margin}")]
    PrecisionExhausted {
        degree: usize,
        needed: i64,
        margin: i64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
