//! Error type shared across the crate.

use std::fmt;

/// Errors produced by game construction, numerical routines, and analyses.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input shapes are inconsistent with the game dimensions.
    DimensionMismatch { context: &'static str, expected: String, found: String },
    /// A matrix or vector violates a structural requirement (asymmetry,
    /// non-unit norm, bad parameter value, malformed file, ...).
    InvalidInput(String),
    /// An oracle or arithmetic step produced a non-finite value.
    NonFinite(&'static str),
    /// The dense eigensolver did not converge.
    EigenFailed(&'static str),
    /// Newton iteration for a fixed point stalled or ran out of iterations.
    NewtonFailed { residual: f64, iters: usize },
    /// A linear system required by an algorithm is singular.
    SingularSystem(&'static str),
    /// The supplied point is not a fixed point of the gradient field.
    NotFixedPoint { residual: f64 },
    /// The Jacobian does not have the structure an operation requires
    /// (`norm` is the offending coupling-block norm).
    StructureMismatch { expected: &'static str, norm: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { context, expected, found } => {
                write!(f, "dimension mismatch in {context}: expected {expected}, found {found}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NonFinite(what) => write!(f, "non-finite value encountered in {what}"),
            Error::EigenFailed(what) => write!(f, "eigensolver failed to converge on {what}"),
            Error::NewtonFailed { residual, iters } => {
                write!(f, "Newton iteration did not converge after {iters} iterations (residual {residual:.3e})")
            }
            Error::SingularSystem(what) => write!(f, "singular linear system in {what}"),
            Error::NotFixedPoint { residual } => {
                write!(f, "point is not a fixed point: gradient residual {residual:.3e}")
            }
            Error::StructureMismatch { expected, norm } => {
                write!(f, "Jacobian is not {expected}-structured (coupling norm {norm:.3e})")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
