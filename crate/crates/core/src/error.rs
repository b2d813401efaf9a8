use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate curve: {what} vanishes near t = {t}")]
    Degenerate { what: &'static str, t: f64 },

    #[error("budget exceeded: {what} needs {needed} > {budget}")]
    Budget {
        what: &'static str,
        needed: f64,
        budget: f64,
    },

    #[error("quadrature did not converge: estimated error {estimate:e} after {panels} panels")]
    Quadrature { estimate: f64, panels: usize },

    #[error("hypothesis failed on [{lo}, {hi}]: {reason}")]
    Hypothesis { lo: f64, hi: f64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
