use alloc::vec::Vec;

use super::approx::{predictor_variances, ConditionalPosterior, RangeSystem};
use super::gauss_hermite::{gauss_hermite, GaussHermite};
use crate::error::InferenceError;
use crate::linalg::{cholesky, LinalgError};
use crate::math;
use crate::model::LatentModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbOptions {
    /// Gauss–Hermite order for the expectations.
    pub order: usize,
    /// Stop when `|step|∞` falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for VbOptions {
    fn default() -> Self {
        Self { order: 9, tol: 1e-8, max_iter: 50 }
    }
}

/// Expected negative log-likelihood of one observation under
/// `η ~ N(ν + δ, σ²)` and its first two derivatives in `δ` at `δ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbExpectation {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `I_i`, `I′_i`, `I″_i` for every observation. The derivatives pass under
/// the expectation because `δ` only shifts the Gaussian.
pub fn vb_expectations(
    model: &LatentModel,
    y: &[f64],
    theta: &[f64],
    nu: &[f64],
    sigma2: &[f64],
    rule: &GaussHermite,
) -> Result<Vec<VbExpectation>, InferenceError> {
    let lik = model.likelihood();
    let mut out = Vec::with_capacity(nu.len());
    for i in 0..nu.len() {
        let scale = math::sqrt(2.0 * sigma2[i]);
        let (mut value, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = lik.obs_terms(i, nu[i] + scale * r, y[i], theta)?;
            value -= w * t.log_lik;
            d1 -= w * t.grad;
            d2 += w * t.neg_hess;
        }
        out.push(VbExpectation {
            value: value / math::SQRT_PI,
            d1: d1 / math::SQRT_PI,
            d2: d2 / math::SQRT_PI,
        });
    }
    Ok(out)
}

/// Corrected mean with its convergence record.
#[derive(Debug, Clone)]
pub struct VbResult {
    pub mean: Vec<f64>,
    pub iterations: usize,
    /// `Σ_i I_i + ½ μᵀQμ` after each accepted step, starting at the GA mean.
    pub objective_trace: Vec<f64>,
    /// Size of the first Newton step `|λ|∞`.
    pub first_step: f64,
}

fn vb_objective(exps: &[VbExpectation], quad: f64) -> f64 {
    exps.iter().map(|e| e.value).sum::<f64>() + 0.5 * quad
}

/// Corrects the Gaussian-approximation mean by minimizing the
/// expected negative log-likelihood plus the prior quadratic, with the GA
/// covariance held fixed. Each step solves `Q^c λ = −c` where
/// `c = Aᵀ I′ + Q μ` and `Q^c = Q + Aᵀ diag(I″) A`; steps are halved when
/// they would raise the objective.
pub fn vb_correct_mean(
    model: &LatentModel,
    y: &[f64],
    cond: &ConditionalPosterior,
    opts: &VbOptions,
) -> Result<VbResult, InferenceError> {
    let theta = &cond.theta;
    let cov = cond.cov.as_ref().ok_or(InferenceError::NonFinite("missing GA covariance"))?;
    let design = model.design();
    let sigma2 = predictor_variances(design, cov)?;
    let rule = gauss_hermite(opts.order);
    let range = match model.rank_deficiency() {
        0 => None,
        _ => Some(RangeSystem::new(model, model.prior_pseudo_inverse(theta)?)?),
    };
    let prior = model.assemble_prior_precision(theta)?;

    let eval = |mu: &[f64]| -> Result<(Vec<VbExpectation>, f64), InferenceError> {
        let nu = model.linear_predictor(mu)?;
        let exps = vb_expectations(model, y, theta, &nu, &sigma2, &rule)?;
        let f = vb_objective(&exps, model.prior_quad_form(theta, mu)?);
        Ok((exps, f))
    };

    let mut mu = cond.mean.clone();
    let (mut exps, mut f) = eval(&mu)?;
    let mut trace = alloc::vec![f];
    let mut first_step = 0.0;
    for iteration in 1..=opts.max_iter {
        let d1: Vec<f64> = exps.iter().map(|e| e.d1).collect();
        let d2: Vec<f64> = exps.iter().map(|e| e.d2).collect();
        let mut c = design.t_matvec(&d1)?;
        for (ci, qi) in c.iter_mut().zip(model.prior_matvec(theta, &mu)?) {
            *ci += qi;
        }
        let lambda: Vec<f64> = match &range {
            None => {
                let qc = prior.add(&design.weighted_gram(&d2)?)?;
                let factor = cholesky(&qc).map_err(|e| match e {
                    LinalgError::NotPositiveDefinite { .. } => InferenceError::IndefiniteQc,
                    other => other.into(),
                })?;
                factor.solve(&c)?.into_iter().map(|v| -v).collect()
            }
            Some(sys) => {
                let factor = sys.factor(&d2).map_err(|e| match e {
                    LinalgError::NotPositiveDefinite { .. } => InferenceError::IndefiniteQc,
                    other => other.into(),
                })?;
                sys.solve(&factor, &c)?.into_iter().map(|v| -v).collect()
            }
        };
        let step = math::max_abs(&lambda);
        if iteration == 1 {
            first_step = step;
        }
        if !step.is_finite() {
            return Err(InferenceError::NonFinite("VB step"));
        }
        if step < opts.tol {
            return Ok(VbResult { mean: mu, iterations: iteration, objective_trace: trace, first_step });
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = mu.iter().zip(&lambda).map(|(m, l)| m + alpha * l).collect();
            match eval(&trial) {
                Ok((e, ft)) if ft <= f => {
                    accepted = Some((trial, e, ft));
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        let Some((trial, e, ft)) = accepted else {
            // no decrease available: the current mean is optimal to rounding
            return Ok(VbResult { mean: mu, iterations: iteration, objective_trace: trace, first_step });
        };
        let moved = alpha * step;
        mu = trial;
        exps = e;
        f = ft;
        trace.push(f);
        if moved < opts.tol {
            return Ok(VbResult { mean: mu, iterations: iteration, objective_trace: trace, first_step });
        }
    }
    Err(InferenceError::VbNoConvergence { iterations: opts.max_iter })
}
