use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid arm law: {0}")]
    InvalidLaw(String),

    #[error("weights are not a probability vector: {0}")]
    InvalidWeights(String),

    #[error("floor gamma={gamma} is infeasible for K={k} (need 0 < gamma and gamma*K < 1)")]
    InfeasibleFloor { gamma: f64, k: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite gradient entry at index {0}")]
    NonFiniteGradient(usize),

    #[error("support [{lo}, {hi}] is not covered by the quadrature grid [{grid_lo}, {grid_hi}]")]
    SupportMismatch { lo: f64, hi: f64, grid_lo: f64, grid_hi: f64 },

    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
