use alloc::vec;
use alloc::vec::Vec;

use super::BatchObjective;
use crate::error::InferenceError;
use crate::linalg::{symmetric_eigen, DenseSymmetric, Matrix};
use crate::math;
use crate::schedule::Stage;

/// Probe distance (in standardized units) for the asymmetric scalings.
pub const AGI_DELTA: f64 = 2.0;
pub const SCALING_MIN: f64 = 1e-6;
pub const SCALING_MAX: f64 = 1e6;
/// Default number of points on each hyperparameter marginal grid.
pub const HYPER_GRID_POINTS: usize = 51;
/// Grid half-width in marginal standard deviations.
pub const HYPER_GRID_SPAN: f64 = 4.0;

/// Standardized coordinates `θ = θ* + V Λ^{1/2} z`, where `V Λ Vᵀ` is the
/// inverse of the negated Hessian at the mode.
#[derive(Debug, Clone)]
pub struct ZFrame {
    pub mode: Vec<f64>,
    /// Eigenvectors `V` (columns).
    pub vectors: Matrix,
    /// Covariance eigenvalues `Λ`, ascending in precision order.
    pub values: Vec<f64>,
    /// `V Λ^{1/2}`.
    pub transform: Matrix,
}

impl ZFrame {
    pub fn new(mode: Vec<f64>, precision: &DenseSymmetric) -> Result<Self, InferenceError> {
        let t = mode.len();
        let eig = symmetric_eigen(precision)?;
        if eig.values.iter().any(|v| !(*v > 0.0)) {
            return Err(InferenceError::NonFinite("non-positive Hessian eigenvalue"));
        }
        let values: Vec<f64> = eig.values.iter().map(|p| 1.0 / p).collect();
        let mut transform = Matrix::zeros(t, t);
        for i in 0..t {
            for k in 0..t {
                transform[(i, k)] = eig.vectors[(i, k)] * math::sqrt(values[k]);
            }
        }
        Ok(Self { mode, vectors: eig.vectors, values, transform })
    }

    pub fn dim(&self) -> usize {
        self.mode.len()
    }

    pub fn to_theta(&self, z: &[f64]) -> Vec<f64> {
        let t = self.dim();
        (0..t).map(|i| self.mode[i] + (0..t).map(|k| self.transform[(i, k)] * z[k]).sum::<f64>()).collect()
    }

    pub fn to_z(&self, theta: &[f64]) -> Vec<f64> {
        let t = self.dim();
        (0..t)
            .map(|k| (0..t).map(|i| self.vectors[(i, k)] * (theta[i] - self.mode[i])).sum::<f64>() / math::sqrt(self.values[k]))
            .collect()
    }

    /// `ln |det(V Λ^{1/2})| = ½ Σ ln Λ_k`.
    pub fn log_abs_det(&self) -> f64 {
        0.5 * self.values.iter().map(|v| math::ln(*v)).sum::<f64>()
    }

    /// `Σ_θ = V Λ Vᵀ`.
    pub fn covariance(&self) -> Matrix {
        self.transform.matmul(&self.transform.transpose()).expect("square")
    }
}

/// Per-axis half-Gaussian variances in the `z` frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalings {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl Scalings {
    pub fn unit(t: usize) -> Self {
        Self { plus: vec![1.0; t], minus: vec![1.0; t] }
    }

    fn get(&self, k: usize, positive: bool) -> f64 {
        if positive {
            self.plus[k]
        } else {
            self.minus[k]
        }
    }
}

/// Probes `z = ±δ e_k` and sets `σ² = δ² / (2Δ)` with `Δ` the log-density
/// drop from the mode, clamped to `[1e-6, 1e6]`.
pub fn fit_asymmetric_scalings(
    obj: &dyn BatchObjective,
    frame: &ZFrame,
    log_density_mode: f64,
    delta: f64,
) -> Result<Scalings, InferenceError> {
    let t = frame.dim();
    let mut points = Vec::with_capacity(2 * t);
    for k in 0..t {
        for sign in [1.0, -1.0] {
            let mut z = vec![0.0; t];
            z[k] = sign * delta;
            points.push(frame.to_theta(&z));
        }
    }
    let v = obj.log_densities(Stage::Exploration, points)?;
    let mut out = Scalings::unit(t);
    for k in 0..t {
        for (offset, positive) in [(0, true), (1, false)] {
            let drop = log_density_mode - v[2 * k + offset];
            if !(drop > 0.0) {
                return Err(InferenceError::NonPositiveDrop { axis: k, positive });
            }
            let s2 = (delta * delta / (2.0 * drop)).clamp(SCALING_MIN, SCALING_MAX);
            if positive {
                out.plus[k] = s2;
            } else {
                out.minus[k] = s2;
            }
        }
    }
    Ok(out)
}

/// Everything stage 1 learns about `π̃(θ | y)`.
#[derive(Debug, Clone)]
pub struct HyperPosture {
    pub frame: ZFrame,
    pub precision: DenseSymmetric,
    pub log_density: f64,
    pub scalings: Scalings,
    pub ridge: f64,
}

/// Approximate posterior marginal of one hyperparameter.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperMarginal {
    pub index: usize,
    /// `(θ_i, density)` pairs, trapezoid-normalized.
    pub grid: Vec<(f64, f64)>,
    pub mean: f64,
    pub sd: f64,
}

/// Marginal of `θ_i` from the asymmetric Gaussian joint in `z`, evaluated
/// along the line `θ* + Σ_{:,i}/Σ_ii · u` where the other coordinates sit at
/// their conditional mean. Along that line the kernel is a split normal, so
/// the mean and sd are exact for it; the grid is for plotting.
pub fn hyper_marginal(posture: &HyperPosture, i: usize, n_points: usize) -> HyperMarginal {
    let frame = &posture.frame;
    let t = frame.dim();
    let sigma_ii: f64 = (0..t).map(|k| frame.transform[(i, k)] * frame.transform[(i, k)]).sum();
    // z per unit of u
    let m: Vec<f64> = (0..t).map(|k| frame.transform[(i, k)] / sigma_ii).collect();
    let a = |positive_u: bool| -> f64 {
        m.iter()
            .enumerate()
            .filter(|(_, mk)| **mk != 0.0)
            .map(|(k, mk)| mk * mk / posture.scalings.get(k, (*mk > 0.0) == positive_u))
            .sum()
    };
    let s_plus = 1.0 / math::sqrt(a(true));
    let s_minus = 1.0 / math::sqrt(a(false));
    let gap = s_plus - s_minus;
    let two_over_pi = 2.0 / core::f64::consts::PI;
    let mean = frame.mode[i] + math::sqrt(two_over_pi) * gap;
    let sd = math::sqrt((1.0 - two_over_pi) * gap * gap + s_plus * s_minus);

    let n = n_points.max(3);
    let half = HYPER_GRID_SPAN * s_plus.max(s_minus);
    let step = 2.0 * half / (n - 1) as f64;
    let mut grid: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let u = -half + j as f64 * step;
            let s = if u >= 0.0 { s_plus } else { s_minus };
            (frame.mode[i] + u, math::exp(-0.5 * u * u / (s * s)))
        })
        .collect();
    let area: f64 = grid.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
    grid.iter_mut().for_each(|p| p.1 /= area);
    HyperMarginal { index: i, grid, mean, sd }
}

/// `ln p(y) ≈ ln|det(VΛ^{1/2})| + (t/2) ln 2π + ln Σ_j w_j exp(ln π̃_j + |z_j|²/2)`.
///
/// The design weights integrate a standard Gaussian in `z`, hence the
/// `|z|²/2` term; the result is linear in the weights, so scaling them all
/// by `c` shifts it by `ln c`.
pub fn log_marginal_likelihood(
    frame: &ZFrame,
    weights: &[f64],
    log_densities: &[f64],
    zs: &[Vec<f64>],
) -> Result<f64, InferenceError> {
    if weights.is_empty() {
        return Err(InferenceError::EmptyPlan);
    }
    let terms: Vec<f64> = (0..weights.len())
        .map(|j| {
            if weights[j] > 0.0 {
                math::ln(weights[j]) + log_densities[j] + 0.5 * math::dot(&zs[j], &zs[j])
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let t = frame.dim() as f64;
    Ok(frame.log_abs_det() + 0.5 * t * math::LN_2PI + math::log_sum_exp(&terms))
}
