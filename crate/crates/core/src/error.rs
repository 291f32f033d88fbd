use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be positive and finite, got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("config key `{key}`: {rule}")]
    Config { key: String, rule: String },

    #[error("bracket [{lo}, {hi}] does not straddle the threshold ({detail}); widen it")]
    Bracket { lo: f64, hi: f64, detail: String },

    #[error("insufficient statistics: {0}")]
    Insufficient(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            rule: rule.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
