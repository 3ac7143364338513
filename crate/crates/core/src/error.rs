use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain (bad lengths, alphabets, shapes).
    #[error("domain error: {0}")]
    Domain(String),
    /// An exhaustive computation would exceed its configured budget.
    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    Budget {
        what: String,
        needed: u128,
        budget: u128,
    },
    #[error("rejection sampling gave up after {attempts} attempts (rejection rate {rejection_rate:.4})")]
    Sampling { attempts: u64, rejection_rate: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
