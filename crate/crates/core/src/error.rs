use thiserror::Error;

use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the set where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A target value lies outside the range of a bijection.
    #[error("range error: {0}")]
    Range(String),

    #[error("gradient of the signed distance is undefined at {0:?}")]
    UndefinedGradient(Vec<f64>),

    #[error("penalty continuation did not converge (max violation {violation:.3e}, gradient norm {grad_norm:.3e})")]
    NotConverged {
        violation: f64,
        grad_norm: f64,
        best: Box<Trajectory>,
    },

    #[error("trajectory time grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
