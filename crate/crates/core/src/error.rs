use thiserror::Error;

/// Errors raised by the library. Every variant maps onto one CLI exit code
/// (see [`Error::exit_code`]).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The working precision could not decide on which side of `1/beta` an
    /// orbit point lies.
    #[error("ambiguous branch at digit {index}: the enclosure contains 1/beta; raise precision_bits")]
    AmbiguousBranch { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// The precision contract `precision_bits >= ceil(depth*log2(beta)) + 64` failed.
    #[error("insufficient precision: depth {depth} needs {required} bits, have {available}")]
    InsufficientPrecision {
        depth: usize,
        required: u32,
        available: u32,
    },

    #[error("digits agree through depth {max_depth}; no separation time found")]
    SeparationNotFound { max_depth: usize },

    #[error("found {found} digit-1 positions within depth {depth}, need {needed}")]
    NotEnoughOnes {
        found: usize,
        needed: usize,
        depth: usize,
    },

    #[error("point is simple: its orbit hits 1/beta at n0 = {n0}")]
    SimplePoint { n0: usize },

    #[error("invalid digit sequence: {0}")]
    InvalidDigits(String),

    #[error("rejection sampling exceeded its budget of {budget} draws")]
    SampleBudgetExceeded { budget: u64 },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Exit code for domain and argument errors.
pub const EXIT_DOMAIN: i32 = 3;
/// Exit code for precision-contract violations and undecidable branches.
pub const EXIT_PRECISION: i32 = 4;
/// Exit code for sampling failures.
pub const EXIT_SAMPLING: i32 = 5;

impl Error {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::AmbiguousBranch { .. } => "ambiguous_branch",
            Error::Domain(_) => "domain",
            Error::InsufficientPrecision { .. } => "insufficient_precision",
            Error::SeparationNotFound { .. } => "separation_not_found",
            Error::NotEnoughOnes { .. } => "not_enough_ones",
            Error::SimplePoint { .. } => "simple_point",
            Error::InvalidDigits(_) => "invalid_digits",
            Error::SampleBudgetExceeded { .. } => "sample_budget_exceeded",
            Error::EmptySample => "empty_sample",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Parse(_) => "parse",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AmbiguousBranch { .. } | Error::InsufficientPrecision { .. } => EXIT_PRECISION,
            Error::SampleBudgetExceeded { .. } | Error::EmptySample => EXIT_SAMPLING,
            _ => EXIT_DOMAIN,
        }
    }
}
