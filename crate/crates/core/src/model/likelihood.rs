use alloc::vec::Vec;

use super::{ModelError, Precision};
use crate::math;

/// Values above this make `φ e^η` untrustworthy for the Newton iteration.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Conditionally independent observation model with canonical link.
#[derive(Debug, Clone, PartialEq)]
pub enum Likelihood {
    /// `y_i ~ N(η_i, 1/τ_y)`.
    Gaussian { precision: Precision },
    /// `y_i ~ Poisson(φ_i e^{η_i})`.
    Poisson { offsets: Vec<f64> },
}

/// Log-density of one observation and its first two derivatives in `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObsTerms {
    pub log_lik: f64,
    pub grad: f64,
    /// `−∂²/∂η²`, always positive.
    pub neg_hess: f64,
}

impl Likelihood {
    pub fn hyper_index(&self) -> Option<usize> {
        match self {
            Self::Gaussian { precision: Precision::Hyper(i) } => Some(*i),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Poisson { .. } => "poisson",
        }
    }

    /// Whether the log-likelihood is exactly quadratic in `η`.
    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian { .. })
    }

    pub fn obs_terms(&self, i: usize, eta: f64, y: f64, theta: &[f64]) -> Result<ObsTerms, ModelError> {
        match self {
            Self::Gaussian { precision } => {
                let log_tau = match precision {
                    Precision::Hyper(h) => theta[*h],
                    Precision::Fixed(v) => *v,
                };
                let tau = math::exp(log_tau);
                let r = y - eta;
                Ok(ObsTerms {
                    log_lik: 0.5 * log_tau - 0.5 * math::LN_2PI - 0.5 * tau * r * r,
                    grad: tau * r,
                    neg_hess: tau,
                })
            }
            Self::Poisson { offsets } => {
                let phi = offsets[i];
                let mu = phi * math::exp(eta);
                if !(mu <= OVERFLOW_LIMIT) {
                    return Err(ModelError::OverflowGuard { index: i });
                }
                Ok(ObsTerms {
                    log_lik: y * (math::ln(phi) + eta) - mu - math::ln_factorial(y),
                    grad: y - mu,
                    neg_hess: mu,
                })
            }
        }
    }
}
