//! Side-by-side run of the pseudo-inverse and kriging constraint paths.

use denseinla_core::constraints::{compare_paths, ConstraintError, PathComparison};
use denseinla_core::fit::prior_mode;
use denseinla_core::linalg::{DenseSymmetric, Matrix};
use denseinla_core::stage2::{gaussian_approx, GaOptions};
use denseinla_core::InferenceError;
use serde::Serialize;

use crate::spec::Problem;

pub const DEFAULT_JITTER: f64 = 1e-4;

/// The worked four-node example: an RW1 prior with three Poisson
/// observations whose curvature is fixed.
pub struct Builtin {
    pub prior: DenseSymmetric,
    pub design: Matrix,
    pub curvature: [f64; 3],
}

/// Row 3 is `(1, 0, 0, 1)`: that is the mapping the printed unconstrained
/// covariance was computed with.
pub fn worked_example() -> Builtin {
    let prior = DenseSymmetric::new(
        4,
        vec![1.0, -1.0, 0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0, -1.0, 1.0],
    )
    .expect("symmetric");
    let design = Matrix::from_rows(&[&[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]]).expect("rows");
    Builtin { prior, design, curvature: [1.796, 2.033, 0.896] }
}

impl Builtin {
    pub fn q_like(&self) -> DenseSymmetric {
        self.design.weighted_gram(&self.curvature).expect("3 weights")
    }

    pub fn compare(&self, jitter: f64) -> Result<PathComparison, ConstraintError> {
        compare_paths(&self.prior, &self.q_like(), jitter)
    }
}

/// Compares at `theta` (prior modes when `None`), linearizing the
/// likelihood at the conditional mode.
pub fn compare_model(problem: &Problem, theta: Option<&[f64]>, jitter: f64) -> Result<PathComparison, InferenceError> {
    let model = &problem.model;
    let theta: Vec<f64> = match theta {
        Some(t) => t.to_vec(),
        None => model.hyper_priors().iter().map(prior_mode).collect(),
    };
    let post = gaussian_approx(model, &problem.y, &theta, &GaOptions::default(), false)?;
    let eta = model.linear_predictor(&post.mean)?;
    let (_, curvature) = model.likelihood_derivatives(&eta, &problem.y, &theta)?;
    let q_like = model.design().weighted_gram(&curvature)?;
    let prior = model.assemble_prior_precision(&theta)?;
    Ok(compare_paths(&prior, &q_like, jitter)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonSummary {
    pub s: usize,
    pub k: usize,
    pub jitter: f64,
    pub max_gap: f64,
    pub pinv_ops: u64,
    pub kriging_projection_ops: u64,
    pub kriging_correction_ops: u64,
}

impl From<&PathComparison> for ComparisonSummary {
    fn from(c: &PathComparison) -> Self {
        Self {
            s: c.s,
            k: c.k,
            jitter: c.jitter,
            max_gap: c.max_gap,
            pinv_ops: c.pinv_ops,
            kriging_projection_ops: c.kriging_ops.projection,
            kriging_correction_ops: c.kriging_ops.correction,
        }
    }
}
