//! Stage 1: the Laplace objective `π̃(θ | y)`, its mode and curvature, the
//! standardized `z` frame, asymmetric scalings and hyperparameter marginals.

mod hessian;
mod mode;
mod objective;
mod posture;

pub use hessian::{hessian_at_mode, hessian_evaluations, regularize, HessianResult, HESSIAN_STEP};
pub use mode::{find_mode, smart_basis, BfgsOptions, Difference, ModeResult};
pub use objective::{Analytic, BatchObjective, HyperObjective, Scheduled};
pub use posture::{
    fit_asymmetric_scalings, hyper_marginal, log_marginal_likelihood, HyperMarginal, HyperPosture, Scalings,
    ZFrame, AGI_DELTA, HYPER_GRID_POINTS, HYPER_GRID_SPAN, SCALING_MAX, SCALING_MIN,
};
