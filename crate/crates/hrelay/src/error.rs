//! Crate-wide error type.
//!
//! Every fallible public operation returns [`Result`]. Numerical failures
//! (non-convergence, divergent series, pole collisions) are reported as
//! typed errors rather than NaN so callers can distinguish "the quantity
//! does not exist" from "the algorithm gave up".

/// Unified error type for the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received an out-of-domain parameter.
    #[error("invalid parameter `{field}`: {message}")]
    InvalidParam {
        /// Name of the offending field or argument.
        field: &'static str,
        /// Human-readable description of the violation.
        message: String,
    },

    /// Gamma-type function evaluated at a non-positive integer.
    #[error("gamma function pole at {argument}")]
    GammaPole {
        /// The offending argument.
        argument: f64,
    },

    /// No valid integration contour exists (empty analyticity strip).
    #[error("contour placement failed: {0}")]
    ContourPlacement(String),

    /// An iterative routine exhausted its budget without meeting tolerance.
    #[error("no convergence in {op}: {message}")]
    NonConvergence {
        /// Operation that failed.
        op: &'static str,
        /// Diagnostic detail (budget, best error reached, ...).
        message: String,
    },

    /// Residue series requested where pole families collide.
    #[error("coincident poles in residue series: {0}")]
    CoincidentPoles(String),

    /// Power-series representation diverges for the given argument.
    #[error("series representation diverges: {0}")]
    SeriesDiverges(String),

    /// The requested quantity does not exist for these parameters
    /// (e.g. a Mellin moment outside the analyticity strip).
    #[error("moment undefined: {0}")]
    MomentUndefined(String),

    /// Operation not supported for this configuration.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Optimization problem is infeasible as posed.
    #[error("infeasible problem: {0}")]
    Infeasible(String),

    /// Configuration file rejected; `path` is the dotted field path.
    #[error("config error at `{path}`: {message}")]
    Config {
        /// Dotted path of the offending field (e.g. `chain.hops[2].kappa`).
        path: String,
        /// Why it was rejected.
        message: String,
    },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for an [`Error::InvalidParam`].
    pub fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParam {
            field,
            message: message.into(),
        }
    }
}
