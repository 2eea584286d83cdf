use std::path::PathBuf;

use crate::quantizer::QuantizerSpec;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its domain.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// Lloyd-Max iteration did not settle within the iteration budget.
    #[error(
        "Lloyd-Max design for {bits} bits did not converge after {iterations} iterations \
         (last relative distortion change {last_change:.3e})"
    )]
    Convergence {
        bits: u32,
        iterations: usize,
        last_change: f64,
        last_iterate: Box<QuantizerSpec>,
    },

    #[error("scenario config: {0}")]
    Config(String),

    #[error("grid of {points} points exceeds the cap of {cap}; raise max_grid_points to run it")]
    GridTooLarge { points: usize, cap: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. } | Error::Config(_) | Error::GridTooLarge { .. }
        )
    }
}
