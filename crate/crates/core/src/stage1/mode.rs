use alloc::vec::Vec;

use super::BatchObjective;
use crate::error::InferenceError;
use crate::linalg::Matrix;
use crate::math;
use crate::schedule::Stage;

/// Finite-difference scheme for gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    /// `t` extra evaluations per gradient.
    Forward,
    /// `2t` extra evaluations per gradient.
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub g_tol: f64,
    pub max_iter: usize,
    pub diff: Difference,
    /// Step `h = step_scale·(1 + |θ|∞)`.
    pub step_scale: f64,
    /// Largest trial move per coordinate in one line search.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { g_tol: 1e-5, max_iter: 200, diff: Difference::Central, step_scale: 1e-3, max_step: 2.0 }
    }
}

/// Outcome of the mode search; `basis` is the final smart-gradient frame.
#[derive(Debug, Clone)]
pub struct ModeResult {
    pub theta: Vec<f64>,
    pub log_density: f64,
    /// Gradient of the log density at `theta`.
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    /// `t × t`, orthonormal columns.
    pub basis: Matrix,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;

struct Search<'o> {
    obj: &'o dyn BatchObjective,
    opts: BfgsOptions,
    evaluations: usize,
}

impl Search<'_> {
    /// `f = −ln π̃`, with failures and non-finite values mapped to `+∞` so
    /// the line search simply backs off.
    fn f(&mut self, theta: &[f64]) -> f64 {
        self.evaluations += 1;
        match self.obj.log_density(Stage::Exploration, theta) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    }

    /// Gradient of `f` from differences along the basis columns.
    fn gradient(&mut self, theta: &[f64], f0: f64, basis: &Matrix) -> Result<Vec<f64>, InferenceError> {
        let t = theta.len();
        let h = self.opts.step_scale * (1.0 + math::max_abs(theta));
        let shifted = |k: usize, sign: f64| -> Vec<f64> { (0..t).map(|i| theta[i] + sign * h * basis[(i, k)]).collect() };
        let (stage, points) = match self.opts.diff {
            Difference::Central => {
                (Stage::GradientCentral, (0..t).flat_map(|k| [shifted(k, 1.0), shifted(k, -1.0)]).collect::<Vec<_>>())
            }
            Difference::Forward => (Stage::GradientForward, (0..t).map(|k| shifted(k, 1.0)).collect()),
        };
        self.evaluations += points.len();
        let values = self.obj.log_densities(stage, points)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(InferenceError::NonFinite("gradient evaluation"));
        }
        let dirs: Vec<f64> = (0..t)
            .map(|k| match self.opts.diff {
                Difference::Central => -(values[2 * k] - values[2 * k + 1]) / (2.0 * h),
                Difference::Forward => (-values[k] - f0) / h,
            })
            .collect();
        Ok((0..t).map(|i| (0..t).map(|k| dirs[k] * basis[(i, k)]).sum()).collect())
    }

    /// Armijo backtracking with quadratic interpolation; returns the
    /// accepted step length and objective value.
    fn line_search(&mut self, theta: &[f64], f0: f64, g: &[f64], d: &[f64]) -> Option<(f64, f64)> {
        let slope = math::dot(g, d);
        let at = |alpha: f64| -> Vec<f64> { theta.iter().zip(d).map(|(x, di)| x + alpha * di).collect() };
        // minimizer of the quadratic through f(0), f'(0), f(alpha)
        let interp = |alpha: f64, fa: f64| {
            let curv = fa - f0 - slope * alpha;
            if curv > 0.0 {
                -slope * alpha * alpha / (2.0 * curv)
            } else {
                f64::NAN
            }
        };
        let mut alpha = 1.0;
        let mut fa = self.f(&at(alpha));
        for _ in 0..MAX_BACKTRACKS {
            if fa <= f0 + ARMIJO_C * alpha * slope {
                let star = interp(alpha, fa);
                if star.is_finite() && star > 0.25 * alpha && star < 4.0 * alpha && math::abs(star - alpha) > 0.01 * alpha {
                    let fs = self.f(&at(star));
                    if fs < fa && fs <= f0 + ARMIJO_C * star * slope {
                        return Some((star, fs));
                    }
                }
                return Some((alpha, fa));
            }
            let star = interp(alpha, fa);
            alpha = if star.is_finite() { star.clamp(0.1 * alpha, 0.9 * alpha) } else { 0.1 * alpha };
            fa = self.f(&at(alpha));
        }
        None
    }
}

/// Replaces the basis with the Gram–Schmidt orthonormalization of
/// `[step, previous columns]`, dropping whichever column becomes dependent.
pub fn smart_basis(step: &[f64], previous: &Matrix) -> Matrix {
    let t = step.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(t);
    let candidates = core::iter::once(step.to_vec()).chain((0..t).map(|k| previous.column(k)));
    for mut v in candidates {
        if cols.len() == t {
            break;
        }
        let norm0 = math::norm2(&v);
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for c in &cols {
                let p = math::dot(&v, c);
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
            }
        }
        let norm = math::norm2(&v);
        if norm > 1e-8 * norm0 {
            v.iter_mut().for_each(|a| *a /= norm);
            cols.push(v);
        }
    }
    let mut out = Matrix::zeros(t, t);
    for (k, c) in cols.iter().enumerate() {
        for i in 0..t {
            out[(i, k)] = c[i];
        }
    }
    out
}

/// Maximizes the log density by BFGS on `−ln π̃` with finite-difference
/// gradients taken along the smart-gradient basis, which is rebuilt around
/// the latest step every iteration.
pub fn find_mode(obj: &dyn BatchObjective, theta0: &[f64], opts: &BfgsOptions) -> Result<ModeResult, InferenceError> {
    let t = obj.dim();
    let mut s = Search { obj, opts: *opts, evaluations: 0 };
    let mut theta = theta0.to_vec();
    let mut f = s.f(&theta);
    if !f.is_finite() {
        return Err(InferenceError::NonFinite("objective at the starting point"));
    }
    let mut basis = Matrix::identity(t);
    if t == 0 {
        return Ok(ModeResult { theta, log_density: -f, gradient: Vec::new(), iterations: 0, evaluations: 1, basis });
    }
    let mut h_inv = Matrix::identity(t);
    let mut scaled = false;
    let mut g = s.gradient(&theta, f, &basis)?;
    let done = |theta: Vec<f64>, f: f64, g: &[f64], it: usize, evals: usize, basis: Matrix| ModeResult {
        theta,
        log_density: -f,
        gradient: g.iter().map(|v| -v).collect(),
        iterations: it,
        evaluations: evals,
        basis,
    };
    for iteration in 1..=opts.max_iter {
        if math::norm2(&g) < opts.g_tol {
            return Ok(done(theta, f, &g, iteration - 1, s.evaluations, basis));
        }
        let mut d: Vec<f64> = h_inv.matvec(&g)?.into_iter().map(|v| -v).collect();
        if math::dot(&g, &d) >= 0.0 {
            h_inv = Matrix::identity(t);
            d = g.iter().map(|v| -v).collect();
        }
        let cap = |d: &mut Vec<f64>| {
            let m = math::max_abs(d);
            if m > opts.max_step {
                d.iter_mut().for_each(|v| *v *= opts.max_step / m);
            }
        };
        cap(&mut d);
        let mut found = s.line_search(&theta, f, &g, &d);
        if found.is_none() {
            // retry along steepest descent before giving up
            h_inv = Matrix::identity(t);
            d = g.iter().map(|v| -v).collect();
            cap(&mut d);
            found = s.line_search(&theta, f, &g, &d);
        }
        let Some((alpha, f_new)) = found else {
            // no descent at rounding resolution: accept when the gradient is
            // already within the finite-difference noise floor
            if math::norm2(&g) < 1e3 * opts.g_tol {
                return Ok(done(theta, f, &g, iteration, s.evaluations, basis));
            }
            return Err(InferenceError::LineSearchFailed { iteration });
        };
        let step: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        theta.iter_mut().zip(&step).for_each(|(x, st)| *x += st);
        let f_old = f;
        f = f_new;
        basis = smart_basis(&step, &basis);
        let g_new = s.gradient(&theta, f, &basis)?;
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = math::dot(&step, &y);
        if sy > 1e-12 * math::norm2(&step) * math::norm2(&y) {
            if !scaled {
                let gamma = sy / math::dot(&y, &y);
                h_inv = Matrix::identity(t);
                h_inv.scale(gamma);
                scaled = true;
            }
            h_inv = bfgs_update(&h_inv, &step, &y, sy);
        }
        g = g_new;
        let stalled = math::abs(f_old - f) <= 1e-14 * (1.0 + math::abs(f)) && math::max_abs(&step) < 1e-10;
        if stalled {
            return Ok(done(theta, f, &g, iteration, s.evaluations, basis));
        }
    }
    Err(InferenceError::MaxIterations { iterations: opts.max_iter })
}

/// `H⁺ = (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(sᵀy)`.
fn bfgs_update(h: &Matrix, s: &[f64], y: &[f64], sy: f64) -> Matrix {
    let t = s.len();
    let rho = 1.0 / sy;
    let hy = h.matvec(y).expect("square");
    let yhy = math::dot(y, &hy);
    let mut out = h.clone();
    for i in 0..t {
        for j in 0..t {
            out[(i, j)] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stage1::Analytic;
    use alloc::vec;

    #[test]
    fn quadratic_converges_quickly() {
        let f = |x: &[f64]| -(2.0 * (x[0] - 1.0).powi(2) + (x[0] - 1.0) * (x[1] + 2.0) + 3.0 * (x[1] + 2.0).powi(2));
        let obj = Analytic::new(2, f);
        let r = find_mode(&obj, &[0.0, 0.0], &BfgsOptions::default()).unwrap();
        assert!(r.iterations <= 3, "{}", r.iterations);
        assert!((r.theta[0] - 1.0).abs() < 1e-6 && (r.theta[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn start_at_mode_stops() {
        let obj = Analytic::new(2, |x: &[f64]| -(x[0] * x[0] + x[1] * x[1]));
        let r = find_mode(&obj, &[0.0, 0.0], &BfgsOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.theta, vec![0.0, 0.0]);
    }

    #[test]
    fn smart_basis_leads_with_step() {
        let b = smart_basis(&[3.0, 4.0], &Matrix::identity(2));
        assert!((b[(0, 0)] - 0.6).abs() < 1e-15 && (b[(1, 0)] - 0.8).abs() < 1e-15);
        assert!(math::abs(b[(0, 0)] * b[(0, 1)] + b[(1, 0)] * b[(1, 1)]) < 1e-15);
    }
}
