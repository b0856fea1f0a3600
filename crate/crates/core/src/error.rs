use crate::constraints::ConstraintError;
use crate::linalg::LinalgError;
use crate::model::ModelError;
use crate::schedule::ScheduleError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InferenceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("Gaussian approximation did not converge in {iterations} iterations")]
    GaussianApproxDiverged { iterations: usize },
    #[error("variational mean correction did not converge in {iterations} iterations")]
    VbNoConvergence { iterations: usize },
    #[error("VB system matrix is not positive definite")]
    IndefiniteQc,
    #[error("mode search hit the iteration limit ({iterations})")]
    MaxIterations { iterations: usize },
    #[error("line search failed at iteration {iteration}")]
    LineSearchFailed { iteration: usize },
    #[error("log density rises away from the mode along axis {axis}")]
    NonPositiveDrop { axis: usize, positive: bool },
    #[error("{strategy} design is unsupported for t = {t} (cap {cap})")]
    UnsupportedDimension { strategy: &'static str, t: usize, cap: usize },
    #[error("exploration plan is empty")]
    EmptyPlan,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("task result has length {found}, expected {expected}")]
    MalformedResult { expected: usize, found: usize },
}
