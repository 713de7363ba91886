use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("defer period {t_d_us} us is shorter than DIFS {difs_us} us")]
    NegativeRegion { t_d_us: f64, difs_us: f64 },

    #[error("defer period {t_d_us} us minus DIFS {difs_us} us is not a whole number of {slot_us} us slots")]
    NonIntegerRegion { t_d_us: f64, difs_us: f64, slot_us: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("objective undefined: {0}")]
    ObjectiveUndefined(String),

    #[error("invalid simulation horizon: {0}")]
    InvalidHorizon(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("batch element {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParams {
        field,
        reason: reason.into(),
    }
}
