use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site index {index} out of range for lattice with {sites} sites")]
    IndexOutOfRange { index: usize, sites: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("system of {sites} sites exceeds the exact-diagonalization cap of {cap}")]
    TooLarge { sites: usize, cap: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("potential is unbounded below: {0}")]
    Unbounded(String),

    #[error("no root found in [{lo}, {hi}]: {detail}")]
    NoRoot { lo: f64, hi: f64, detail: String },

    #[error("fit failed: {reason} (best chi2 = {best_chi2})")]
    FitFailure { reason: String, best_chi2: f64 },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
}

pub type Result<T> = std::result::Result<T, Error>;
