//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error enumeration.
#[derive(Debug, Error)]
pub enum Error {
    /// Graph or matrix size outside the documented range.
    #[error("invalid size: {0}")]
    InvalidSize(String),

    /// Malformed argument that is not a size or a structural invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Config document could not be parsed; carries line/field context.
    #[error("parse error: {0}")]
    Parse(String),

    /// A structural invariant of the data model was violated.
    #[error("validation error: {0}")]
    Validation(String),

    /// A size guard for an expensive computation was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Full-space matrix couples the one-excitation sector to the rest.
    #[error("excitation sector leakage: max off-sector element {max_leak:.3e}")]
    BlockLeakage { max_leak: f64 },

    /// Target pair is invalid (e.g. m = n).
    #[error("invalid target: {0}")]
    InvalidTarget(String),

    /// Amplitudes or density matrix do not describe a physical state.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// Operation requires a class-I or class-II symmetry classification.
    #[error("invalid classification: {0}")]
    InvalidClassification(String),

    /// Targeting with a single excited site is impossible; the target pair's
    /// mirror line passes between sites, so an ME encoding is required.
    #[error("requires ME encoding: {0}")]
    RequiresMeEncoding(String),

    /// An operation-specific precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
