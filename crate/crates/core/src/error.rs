use thiserror::Error;

/// Errors produced by the simulation, estimation and identification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time step {dt:e} s exceeds stability bound {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("analysis window too short: {periods:.2} periods (need at least {required})")]
    WindowTooShort { periods: f64, required: f64 },

    #[error("harmonic balance did not converge at amplitude {amplitude:e} (residual {residual:e})")]
    NoConvergence { amplitude: f64, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("amplitude {0:e} below noise floor")]
    BelowNoiseFloor(f64),

    #[error("undefined energy fractions: fundamental contribution of mode 1 is zero")]
    ZeroReferenceEnergy,

    #[error("missing input: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
