use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A config document could not be parsed.
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    /// A value parsed but violates a documented range.
    #[error("invalid {what}: {message}")]
    Validation { what: &'static str, message: String },

    /// An integral outside the closed-form family was requested from the exact path.
    #[error("integral s^{a} t^{b} u^{c} is outside the closed-form family ({reason}); use quadrature")]
    UnsupportedIntegral { a: i32, b: i32, c: i32, reason: &'static str },

    #[error("quadrature did not converge: estimate {estimate:e}, achieved bound {bound:e}, target {target:e}")]
    Quadrature { estimate: f64, bound: f64, target: f64 },

    /// Loss of positive definiteness at the working precision.
    #[error("overlap matrix is not positive definite at {digits} digits (pivot {pivot} = {value:e}); raise precision_digits")]
    Conditioning { digits: u32, pivot: usize, value: f64 },

    #[error("eigen residual {value:e} exceeds {threshold:e}; raise precision_digits")]
    Residual { value: f64, threshold: f64 },

    #[error("assembly check failed: {0}")]
    Assembly(String),

    #[error("k optimization did not converge after {iterations} iterations (last k = {last_k}, |dk| = {last_step:e})")]
    Convergence { iterations: usize, last_k: f64, last_step: f64, trace: Vec<(f64, f64)> },

    #[error("expectation value requires a normalized state (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(what: &'static str, message: impl Into<String>) -> Self {
        Error::Validation { what, message: message.into() }
    }
}
