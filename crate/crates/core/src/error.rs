use thiserror::Error;

/// A configuration value failed validation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid value for `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShuntingError {
    /// `(A + |e|) * dt` exceeds the region where the integrator is monotone.
    #[error("step dt={dt} too large for decay rate {rate} (limit {limit})")]
    StepTooLarge { dt: f64, rate: f64, limit: f64 },
    #[error("neural activity {value} left the interval ({lower}, {upper})")]
    OutOfBounds { value: f64, lower: f64, upper: f64 },
    #[error("invalid step: {0}")]
    InvalidStep(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("{filter} innovation covariance is singular")]
    SingularInnovation { filter: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("step {step}: {source}")]
    Shunting {
        step: usize,
        #[source]
        source: ShuntingError,
    },
    #[error("step {step}: {source}")]
    Estimation {
        step: usize,
        #[source]
        source: EstimationError,
    },
    #[error("step {step}: {what} = {value} exceeds divergence limit")]
    Diverged {
        step: usize,
        what: &'static str,
        value: f64,
    },
    #[error("step {step}: invariant violated: {what}")]
    Invariant { step: usize, what: String },
    #[error("time {t} outside reference table range [{start}, {end}]")]
    ReferenceRange { t: f64, start: f64, end: f64 },
}
