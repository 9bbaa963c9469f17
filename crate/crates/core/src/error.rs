use thiserror::Error;

/// Errors raised by the bound calculators and the combinatorial oracles.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the set on which the quantity is defined.
    /// The message names the violated constraint.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed or unsupported input (bad literal, unsupported field size, size guard).
    #[error("invalid input: {0}")]
    Input(String),
    /// A derivative was requested on a boundary point or on the branch seam.
    #[error("nondifferentiable point: {0}")]
    NonDifferentiable(String),
    /// An internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}
