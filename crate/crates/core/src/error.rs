//! Error type shared by every module of the core crate.

use alloc::string::String;

/// Failures reported by the numerical routines.
///
/// Variants carry enough context to tell a caller which precondition broke
/// without a backtrace; none of them are recoverable inside the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("point lies outside the truncation window: {0}")]
    OutsideWindow(String),
    #[error("evaluation at or too close to the pole (distance {0:e})")]
    Pole(f64),
    #[error("coefficient field is not elliptic: {0}")]
    NotElliptic(String),
    #[error("point lies on the branch ray of the conjugate fundamental solution")]
    OnBranchRay,
    #[error("limit did not converge: {0}")]
    NoConvergence(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("linear system is singular at pivot {0}")]
    Singular(usize),
    #[error("B{which} is not invertible at x = {x}")]
    NotInvertible { which: usize, x: f64 },
    #[error("atom violates {0}")]
    AtomInvariant(String),
    #[error("empty set: {0}")]
    Empty(String),
    #[error("interval budget exhausted: {0}")]
    Budget(String),
}

pub type Result<T> = core::result::Result<T, Error>;

/// Shorthand for building an [`Error::Invalid`] from `format!` arguments.
macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::Invalid(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
