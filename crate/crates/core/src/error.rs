use thiserror::Error;

use crate::model::ProviderId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid recruitment strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid bids: {0}")]
    InvalidBids(String),

    #[error("cost density is zero at c = {0}; virtual cost undefined")]
    DegenerateDensity(f64),

    #[error("cost distribution of provider {0} is not regular")]
    NotRegular(ProviderId),

    #[error("payment undefined for non-candidate provider {0}")]
    PaymentUndefined(ProviderId),

    #[error("brute-force search limited to 4 providers, got {0}")]
    TooManyProviders(usize),

    #[error("unknown mechanism `{0}`")]
    UnknownMechanism(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Solver(_) => 2,
            _ => 1,
        }
    }
}
