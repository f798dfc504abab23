use thiserror::Error;

/// Errors produced by the model, gait solver, controller synthesis and
/// simulation configuration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    #[error("stance foot velocity must be zero at phase start (|v| = {0:e})")]
    StanceVelocity(f64),

    #[error("time {t} outside of phase [0, {period}]")]
    PhaseTime { t: f64, period: f64 },

    #[error("periodic gait constraints are rank deficient (rank {rank} of {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("commanded velocity is infeasible (constraint residual {residual:e})")]
    InfeasibleVelocity { residual: f64 },

    #[error("constraint block C*B is singular for every input pair")]
    SingularConstraint,

    #[error(
        "Riccati iteration did not converge after {iterations} iterations (last step {step:e})"
    )]
    RiccatiDiverged { iterations: usize, step: f64 },

    #[error("time-projection system is singular at tau = {tau}")]
    SingularProjection { tau: f64 },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid input data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
