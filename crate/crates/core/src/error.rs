use thiserror::Error;

/// Errors raised by the algebra, density and experiment layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("p not prime: p = {p}")]
    NotPrime { p: u64 },

    #[error("exponent e must be at least 1, got e = {e}")]
    InvalidExponent { e: u32 },

    #[error("field order q = {p}^{e} exceeds the supported maximum {max}")]
    OrderOverflow { p: u64, e: u32, max: u64 },

    #[error("q = {q} is not a prime power")]
    NotPrimePower { q: u64 },

    #[error("element index {index} out of range [0, {q})")]
    IndexOutOfRange { index: u64, q: u64 },

    #[error("negative polynomial index {0}")]
    NegativeIndex(String),

    #[error("division by zero")]
    DivisionByZero,

    #[error("operands belong to different fields (q = {left} vs q = {right})")]
    FieldMismatch { left: u64, right: u64 },

    #[error("{0} is not a monic irreducible polynomial")]
    NotIrreducible(String),

    #[error("cannot extend a matrix with more rows than columns (k = {k}, n = {n})")]
    RowsExceedColumns { k: usize, n: usize },

    #[error("matrix is not unimodular")]
    NotUnimodular,

    #[error("{what} needs {required} evaluations, over the budget of {budget}")]
    BudgetExceeded {
        what: &'static str,
        required: String,
        budget: u64,
    },

    #[error("invalid {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(pos: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            pos,
            msg: msg.into(),
        }
    }

    /// True for errors caused by a resource budget rather than by bad input.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
