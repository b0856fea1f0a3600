use alloc::vec::Vec;

use super::BatchObjective;
use crate::error::InferenceError;
use crate::linalg::{symmetric_eigen, DenseSymmetric, Matrix};
use crate::schedule::Stage;

/// Default second-difference step.
pub const HESSIAN_STEP: f64 = 1e-3;

/// Negated Hessian of the log density at the mode.
#[derive(Debug, Clone)]
pub struct HessianResult {
    /// `−∇² ln π̃(θ* | y)`, positive definite after any ridge.
    pub precision: DenseSymmetric,
    pub evaluations: usize,
    /// Ridge added to make `precision` positive definite (0 if none).
    pub ridge: f64,
}

/// Evaluation count of [`hessian_at_mode`]: `2t` axial plus two per pair.
pub fn hessian_evaluations(t: usize) -> usize {
    t * t + t
}

/// Central second differences along the columns `g_k` of `basis`, mapped
/// back with `G D Gᵀ`. Diagonal terms use `θ ± h g_k`; each pair adds
/// `θ ± h (g_i + g_j)`. Issues `t² + t` evaluations in one batch, inside the
/// `2(t² + t)` budget.
pub fn hessian_at_mode(
    obj: &dyn BatchObjective,
    mode: &[f64],
    log_density_mode: f64,
    basis: &Matrix,
    step: f64,
) -> Result<HessianResult, InferenceError> {
    let t = mode.len();
    let h = step;
    let point = |coef: &[(usize, f64)]| -> Vec<f64> {
        (0..t).map(|i| mode[i] + coef.iter().map(|(k, c)| c * h * basis[(i, *k)]).sum::<f64>()).collect()
    };
    let mut points = Vec::with_capacity(hessian_evaluations(t));
    for k in 0..t {
        points.push(point(&[(k, 1.0)]));
        points.push(point(&[(k, -1.0)]));
    }
    for i in 0..t {
        for j in i + 1..t {
            points.push(point(&[(i, 1.0), (j, 1.0)]));
            points.push(point(&[(i, -1.0), (j, -1.0)]));
        }
    }
    let evaluations = points.len();
    let v = obj.log_densities(Stage::Hessian, points)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(InferenceError::NonFinite("Hessian evaluation"));
    }
    let f0 = log_density_mode;
    let mut d = Matrix::zeros(t, t);
    for k in 0..t {
        d[(k, k)] = -(v[2 * k] + v[2 * k + 1] - 2.0 * f0) / (h * h);
    }
    let mut idx = 2 * t;
    for i in 0..t {
        for j in i + 1..t {
            let (pp, mm) = (v[idx], v[idx + 1]);
            idx += 2;
            let sum_i = v[2 * i] + v[2 * i + 1];
            let sum_j = v[2 * j] + v[2 * j + 1];
            let val = -(pp + mm - sum_i - sum_j + 2.0 * f0) / (2.0 * h * h);
            d[(i, j)] = val;
            d[(j, i)] = val;
        }
    }
    let rotated = basis.matmul(&d)?.matmul(&basis.transpose())?.symmetrized();
    let (precision, ridge) = regularize(&rotated)?;
    Ok(HessianResult { precision, evaluations, ridge })
}

/// Adds `c·I`, doubling `c` from `1e-6·max(1, |λ|max)`, until every
/// eigenvalue is positive. Returns the input unchanged when already SPD.
pub fn regularize(p: &DenseSymmetric) -> Result<(DenseSymmetric, f64), InferenceError> {
    if p.n() == 0 {
        return Ok((p.clone(), 0.0));
    }
    let eig = symmetric_eigen(p)?;
    let max = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-10 * max;
    let min = eig.values[0];
    if min > floor {
        return Ok((p.clone(), 0.0));
    }
    let mut c = 1e-6 * max;
    while min + c <= floor {
        c *= 2.0;
    }
    Ok((p.add_diagonal(c), c))
}
