use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("no closed-form projection for set kind `{0}`")]
    NoClosedFormProjection(&'static str),

    #[error("barrier subsolver did not converge after {iterations} Newton steps (kkt residual {residual:e})")]
    BarrierNotConverged { iterations: usize, residual: f64 },

    #[error("point is not in the feasible set (residual {residual:e})")]
    Infeasible { residual: f64 },

    #[error("projection budget of {max_inner} inner iterations exhausted (gap {gap:e}, tolerance {tolerance:e})")]
    ProjectionBudget {
        max_inner: usize,
        gap: f64,
        tolerance: f64,
        best: Vec<f64>,
    },

    #[error("invalid tolerance parameters: {0}")]
    InvalidParams(String),

    #[error("step-size rule violates {0}")]
    RuleViolation(String),

    #[error("{rule} rule undefined at zero subgradient")]
    ZeroSubgradient { rule: &'static str },

    #[error("level invariant violated at k={k}: {message}")]
    LevelInvariant { k: usize, message: String },

    #[error("instance generation failed after {attempts} attempts: {message}")]
    Generation { attempts: u32, message: String },

    #[error("missing trace data: {0}")]
    MissingTraceData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn check_finite(x: &[f64], what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
