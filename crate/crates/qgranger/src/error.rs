use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model is not stationary: spectral radius {0:.6} >= 1")]
    NonStationary(f64),

    #[error("Lyapunov iteration did not converge (residual {0:e})")]
    LyapunovDiverged(f64),

    #[error("NaN input at index {0}")]
    NanInput(usize),

    #[error("lag {lag} exceeds n/4 = {limit} (estimates use at most a quarter of the samples)")]
    LagTooLarge { lag: i64, limit: usize },

    #[error("missing lag {0} in moments")]
    MissingLag(i64),

    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {err:e})")]
    Quadrature { lo: f64, hi: f64, err: f64 },

    #[error("SVD did not converge")]
    Svd,

    #[error("covariance is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error("{0}")]
    Domain(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
