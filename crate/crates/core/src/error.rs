use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown scenario family `{0}` (expected sc1, sc2 or sc3)")]
    UnknownFamily(String),
    #[error("unknown controller `{0}` (expected b1, b2, b3 or proposed)")]
    UnknownController(String),
    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
}

impl ConfigError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        ConfigError::Invalid(msg.into())
    }
}

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("matrix dimensions do not agree: {0}")]
    Dimension(String),
    #[error("R + B'PB is singular at iteration {iteration}")]
    Singular { iteration: usize },
    #[error(
        "Riccati iteration did not converge in {iterations} iterations (last change {last_change:e}, tolerance {tolerance:e})"
    )]
    NotConverged {
        iterations: usize,
        last_change: f64,
        tolerance: f64,
    },
}

#[derive(Debug, Error)]
pub enum StoppingError {
    #[error("deceleration level is zero with v0 = {v0} > 0: the vehicle never stops")]
    NeverStops { v0: f64 },
    #[error("invalid braking input: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum RiskZoneError {
    #[error(transparent)]
    Stopping(#[from] StoppingError),
    #[error("minimum stopping distance {d_min} m exceeds comfortable stopping distance {d_comfort} m")]
    Ordering { d_min: f64, d_comfort: f64 },
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("toml serialization error: {0}")]
    Toml(#[from] toml::ser::Error),
}
