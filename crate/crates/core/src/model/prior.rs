use crate::math;

/// Prior on one hyperparameter, expressed on the log-precision scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HyperPriorSpec {
    /// Penalized-complexity prior with `P(σ > u) = alpha`, `σ = τ^{-1/2}`.
    PcPrecision { u: f64, alpha: f64 },
    Gaussian { mean: f64, prec: f64 },
}

impl HyperPriorSpec {
    pub fn is_valid(&self) -> bool {
        match *self {
            Self::PcPrecision { u, alpha } => u > 0.0 && u.is_finite() && alpha > 0.0 && alpha < 1.0,
            Self::Gaussian { mean, prec } => mean.is_finite() && prec > 0.0 && prec.is_finite(),
        }
    }

    /// Log-density at `θ = ln τ`.
    ///
    /// The PC density on `σ` is `λ e^{−λσ}`; with `σ = e^{−θ/2}` the Jacobian
    /// is `σ/2`, giving `ln(λ/2) − θ/2 − λ e^{−θ/2}`.
    pub fn log_density(&self, theta: f64) -> f64 {
        match *self {
            Self::PcPrecision { u, alpha } => {
                let lambda = -math::ln(alpha) / u;
                math::ln(lambda / 2.0) - theta / 2.0 - lambda * math::exp(-theta / 2.0)
            }
            Self::Gaussian { mean, prec } => {
                let d = theta - mean;
                0.5 * math::ln(prec) - 0.5 * math::LN_2PI - 0.5 * prec * d * d
            }
        }
    }
}
