use thiserror::Error;

/// Errors raised by model construction, solving and the padded machinery.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// `{y : Dy >= d - Cx}` is empty at the queried first-stage point.
    #[error("deterministic second-stage block is infeasible at the given first-stage point")]
    DeterministicBlockInfeasible,

    /// The recourse LP is unbounded below, so `F(x, xi) >= Z` fails.
    #[error("recourse problem is unbounded below (model defect)")]
    UnboundedRecourse,

    #[error("optimization problem is infeasible: {0}")]
    Infeasible(String),

    #[error("optimization problem is unbounded: {0}")]
    Unbounded(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("padding mode not applicable: {0}")]
    ModeNotApplicable(String),

    #[error("combinatorial budget exceeded: {count} mixed scenarios > limit {limit}")]
    BudgetExceeded { count: f64, limit: usize },

    #[error("separation value {milp} disagrees with re-evaluated H = {recheck}")]
    SeparationMismatch { milp: f64, recheck: f64 },

    #[error("constraint generation stalled: {0}")]
    CgStalled(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
