//! Stage 2: hyperparameter exploration designs, the per-θ Gaussian
//! approximation with its variational mean correction, and integration into
//! latent marginals and DIC.

mod approx;
mod gauss_hermite;
mod integrate;
mod plan;
mod vb;

pub use approx::{gaussian_approx, predictor_variances, pseudo_log_det, ConditionalPosterior, GaOptions};
pub use gauss_hermite::{gauss_hermite, GaussHermite, MAX_GH_ORDER};
pub use integrate::{deviance, dic, expected_deviance, integrate_marginals, mixture_weights, Dic, LatentMarginal};
pub use plan::{
    build_plan, ccd_base_factors, ccd_corner_count, ccd_evaluation_count, ccd_factor_masks, design_points,
    DesignPoint, ExplorationPlan, PlanPoint, Strategy, F0, MAX_CCD_DIM, MAX_GRID_DIM,
};
pub use vb::{vb_correct_mean, vb_expectations, VbExpectation, VbOptions, VbResult};
