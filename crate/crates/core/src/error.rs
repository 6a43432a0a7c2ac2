use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DilationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A raw-coordinate map does not respect the null-space quotients.
    #[error("map is not well defined on the quotient ({context}): residual {residual:.3e} > {tolerance:.3e}")]
    NotWellDefined {
        context: String,
        residual: f64,
        tolerance: f64,
    },

    #[error("invalid flip {pair}: {reason}")]
    InvalidFlip { pair: String, reason: String },

    #[error("incoherent flips {triple}: braid residual {residual:.3e} > {tolerance:.3e}")]
    IncoherentFlips {
        triple: String,
        residual: f64,
        tolerance: f64,
    },

    /// The window Gram has a negative eigenvalue beyond tolerance, so no
    /// regular isometric dilation exists for the data.
    #[error("kernel window is not positive semidefinite: margin {margin:.6e} < -{tolerance:.3e}")]
    NotPositiveDefinite { margin: f64, tolerance: f64 },

    #[error("instance error: {0}")]
    Instance(String),
}

pub type Result<T> = std::result::Result<T, DilationError>;

impl DilationError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DilationError::InvalidArgument(msg.into())
    }
}
