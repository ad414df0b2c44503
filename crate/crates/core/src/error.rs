use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("under-resolved: basis cutoff {cutoff} is below the required {required} for smoothing scale N = {n}")]
    UnderResolved { cutoff: f64, required: f64, n: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("exponent {value:.3} exceeds the overflow guard at grid point ({i}, {j}) = ({x:.5}, {y:.5})")]
    Overflow {
        value: f64,
        i: usize,
        j: usize,
        x: f64,
        y: f64,
    },

    #[error("Seiberg bound violated: {0}")]
    Seiberg(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
