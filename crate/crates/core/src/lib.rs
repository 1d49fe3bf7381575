//! Desk-scale study toolkit for x2 single-image super-resolution of
//! satellite-like imagery whose acquisition leaves alias and small
//! inter-band shifts in the low-resolution product.
//!
//! The crate covers the full loop: synthesizing low-resolution imagery from
//! high-resolution ground truth under six acquisition configurations,
//! building registered LR/HR training pairs, training a small RRDB network
//! with an L1 loss, and evaluating PSNR orderings across configurations.

pub mod corpus;
pub mod eval;
pub mod net;
pub mod pairing;
pub mod par;
pub mod raster;
pub mod signal;
pub mod sim;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed files: bad magic, truncated payloads, schema violations.
    #[error("format error: {0}")]
    Format(String),
    /// Shape or band-count mismatches between operands.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Inputs that violate a documented precondition (NaN data, negative
    /// sigma, zero-variance registration input, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Training aborted (non-finite loss).
    #[error("training diverged: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
