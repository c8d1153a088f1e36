use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid moments: m4 = {m4:e} < m2^2 = {m2_sq:e}")]
    InvalidMoments { m2_sq: f64, m4: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Convergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("signal too short: {0}")]
    SignalTooShort(String),

    #[error("Nyquist violation: sample rate {sample_rate} Hz must exceed {required} Hz")]
    Nyquist { sample_rate: f64, required: f64 },

    #[error("Newton solver failed at step {step} (t = {time:e} s): residual {residual:e}")]
    Solver { step: usize, time: f64, residual: f64 },

    #[error("rectifier did not settle within {windows} windows")]
    SettleTimeout { windows: usize },

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
