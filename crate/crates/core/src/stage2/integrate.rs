use alloc::vec::Vec;

use super::gauss_hermite::GaussHermite;
use crate::error::InferenceError;
use crate::math;
use crate::model::LatentModel;

/// Posterior mixture weights over plan points.
///
/// The design weights integrate a standard Gaussian in `z`, so each point's
/// unnormalized log density is divided by `φ(z)`: `w_j ∝ w_design·exp(ln π̃_j + |z_j|²/2)`.
pub fn mixture_weights(design_weights: &[f64], log_densities: &[f64], zs: &[Vec<f64>]) -> Result<Vec<f64>, InferenceError> {
    if design_weights.is_empty() {
        return Err(InferenceError::EmptyPlan);
    }
    let logs: Vec<f64> = (0..design_weights.len())
        .map(|j| {
            if design_weights[j] > 0.0 {
                math::ln(design_weights[j]) + log_densities[j] + 0.5 * math::dot(&zs[j], &zs[j])
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let w = math::softmax(&logs);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(InferenceError::NonFinite("mixture weights"));
    }
    Ok(w)
}

/// Gaussian-mixture marginal of one latent coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMarginal {
    pub index: usize,
    pub mean: f64,
    pub sd: f64,
    /// `(weight, mean_j, sd_j)` per plan point.
    pub components: Vec<(f64, f64, f64)>,
}

impl LatentMarginal {
    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|(w, m, s)| {
                let p = if *s > 0.0 {
                    math::norm_cdf((x - m) / s)
                } else if x >= *m {
                    1.0
                } else {
                    0.0
                };
                w * p
            })
            .sum()
    }

    /// Mixture quantile by bisection on the CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        let spread = self.components.iter().map(|c| c.2).fold(self.sd, f64::max);
        let (mut lo, mut hi) = self.components.iter().fold((self.mean, self.mean), |(lo, hi), c| (lo.min(c.1), hi.max(c.1)));
        lo -= 10.0 * spread + 1e-300;
        hi += 10.0 * spread + 1e-300;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Mixes the per-point conditional means and variances with normalized
/// weights, summing in plan order.
pub fn integrate_marginals(
    weights: &[f64],
    means: &[Vec<f64>],
    variances: &[Vec<f64>],
) -> Result<Vec<LatentMarginal>, InferenceError> {
    if weights.is_empty() {
        return Err(InferenceError::EmptyPlan);
    }
    let s = means[0].len();
    let mut out = Vec::with_capacity(s);
    for i in 0..s {
        let mut mean = 0.0;
        let mut second = 0.0;
        let mut components = Vec::with_capacity(weights.len());
        for j in 0..weights.len() {
            let (m, v) = (means[j][i], variances[j][i].max(0.0));
            mean += weights[j] * m;
            second += weights[j] * (v + m * m);
            components.push((weights[j], m, math::sqrt(v)));
        }
        let var = (second - mean * mean).max(0.0);
        out.push(LatentMarginal { index: i, mean, sd: math::sqrt(var), components });
    }
    Ok(out)
}

/// `D(x, θ) = −2 ln π(y | Ax, θ)`.
pub fn deviance(model: &LatentModel, y: &[f64], theta: &[f64], x: &[f64]) -> Result<f64, InferenceError> {
    let eta = model.linear_predictor(x)?;
    Ok(-2.0 * model.log_likelihood(&eta, y, theta)?)
}

/// `E[D]` for `η_i ~ N(mean_i, var_i)` independently per observation,
/// which is exact for the deviance because it is a sum over observations.
pub fn expected_deviance(
    model: &LatentModel,
    y: &[f64],
    theta: &[f64],
    eta_mean: &[f64],
    eta_var: &[f64],
    rule: &GaussHermite,
) -> Result<f64, InferenceError> {
    let lik = model.likelihood();
    let mut total = 0.0;
    for i in 0..eta_mean.len() {
        let scale = math::sqrt(2.0 * eta_var[i]);
        let mut e = 0.0;
        for (r, w) in rule.nodes.iter().zip(&rule.weights) {
            e += w * lik.obs_terms(i, eta_mean[i] + scale * r, y[i], theta)?.log_lik;
        }
        total += e / math::SQRT_PI;
    }
    Ok(-2.0 * total)
}

/// Deviance information criterion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dic {
    pub dic: f64,
    pub p_eff: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
}

/// `D̄ = Σ w_j E_j[D]`, `p_eff = D̄ − D(x̄, θ̄)`, `DIC = D̄ + p_eff`.
pub fn dic(weights: &[f64], expected_deviances: &[f64], deviance_at_mean: f64) -> Result<Dic, InferenceError> {
    if weights.is_empty() {
        return Err(InferenceError::EmptyPlan);
    }
    let mean_deviance: f64 = weights.iter().zip(expected_deviances).map(|(w, d)| if *w > 0.0 { w * d } else { 0.0 }).sum();
    let p_eff = mean_deviance - deviance_at_mean;
    Ok(Dic { dic: mean_deviance + p_eff, p_eff, mean_deviance, deviance_at_mean })
}
