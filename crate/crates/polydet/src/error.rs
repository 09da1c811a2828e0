use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input (dimensions, signs, ranges).
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerically meaningless intermediate result (e.g. a nonpositive
    /// interference power). Reported, never clamped.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Fixed-point iteration ran out of iterations.
    #[error("fixed point did not converge after {iterations} iterations (residual {residual:.3e}, tol {tol:.3e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    /// Adaptive quadrature could not meet the requested absolute tolerance.
    #[error("quadrature tolerance not reached: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureTolerance { achieved: f64, requested: f64 },

    /// The moment (Hankel) weight system degenerated numerically.
    #[error("weight system is ill-conditioned (cond ~ {cond:.3e}); the Hankel moment matrix degenerates as the filter rank grows")]
    IllConditioned { cond: f64 },

    /// An operation needed higher-order moments than were computed.
    #[error("insufficient moment order: need {needed}, available {available}")]
    InsufficientOrder { needed: usize, available: usize },

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Json(_) | Error::InsufficientOrder { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
