use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{field} must be finite and > 0 (got {value})")]
    InvalidParameter { field: &'static str, value: f64 },

    #[error("{field} must be finite and >= 0 (got {value})")]
    InvalidState { field: &'static str, value: f64 },

    #[error("vector field is not differentiable at x = {x}; the Jacobian needs x > 0")]
    NonDifferentiable { x: f64 },

    #[error("no interior equilibrium: requires beta > alpha (alpha = {alpha}, beta = {beta})")]
    NoInterior { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("invalid argument: {field} {reason}")]
    InvalidArgument {
        field: &'static str,
        reason: &'static str,
    },

    #[error("step size underflow at t = {t} (h = {h:e} < h_min)")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BasinError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Integrate(#[from] IntegrateError),

    #[error("separatrix scan requires a stable interior equilibrium (alpha/beta = {ratio} must exceed 1/sqrt(3))")]
    UnstableRegime { ratio: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trajectory was produced with different parameters")]
    ParamsMismatch,

    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
}
