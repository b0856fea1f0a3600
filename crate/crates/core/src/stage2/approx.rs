use alloc::vec::Vec;

use crate::error::InferenceError;
use crate::linalg::{cholesky, CholeskyFactor, DenseSymmetric, LinalgError, Matrix};
use crate::math;
use crate::model::{LatentModel, ModelError, PriorPseudoInverse};

/// Newton settings for the Gaussian approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaOptions {
    /// Stop when `|x_new − x_old|∞` falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for GaOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100 }
    }
}

/// Gaussian approximation `x | θ, y ~ N(x*, Σ*)` and the Laplace log density.
#[derive(Debug, Clone)]
pub struct ConditionalPosterior {
    pub theta: Vec<f64>,
    /// Conditional mode `x*`.
    pub mean: Vec<f64>,
    /// `Σ*`; on the prior range when the prior is rank deficient.
    pub cov: Option<DenseSymmetric>,
    /// Unnormalized `ln π̃(θ | y)`.
    pub log_density: f64,
    pub iterations: usize,
    /// Whether the pseudo-inverse path was used.
    pub constrained: bool,
}

enum PriorForm {
    Full { log_det: f64 },
    Pseudo(RangeSystem),
}

/// A rank-deficient posterior written in prior-range coordinates
/// `x = V u`: the precision of `u` is `diag(λ) + (AV)ᵀ W (AV)`, a
/// `rank × rank` system. This is `Q⁺ − Q⁺(I + L Q⁺)⁻¹ L Q⁺` without ever
/// forming an `s × s` inverse.
pub(crate) struct RangeSystem {
    pub prior: PriorPseudoInverse,
    /// `A V`, fixed for one `θ`.
    av: Matrix,
}

impl RangeSystem {
    pub fn new(model: &LatentModel, prior: PriorPseudoInverse) -> Result<Self, InferenceError> {
        let av = model.design().matmul(&prior.range_basis)?;
        Ok(Self { prior, av })
    }

    /// Cholesky factor of `diag(λ) + (AV)ᵀ diag(w) (AV)`.
    pub fn factor(&self, w: &[f64]) -> Result<CholeskyFactor, LinalgError> {
        let mut p = self.av.weighted_gram(w)?.into_matrix();
        for (i, l) in self.prior.range_precisions.iter().enumerate() {
            p[(i, i)] += l;
        }
        cholesky(&p.symmetrized())
    }

    /// `Σ* b = V P⁻¹ Vᵀ b`.
    pub fn solve(&self, factor: &CholeskyFactor, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let u = factor.solve(&self.prior.range_basis.t_matvec(b)?)?;
        self.prior.range_basis.matvec(&u)
    }

    /// Dense `Σ* = V P⁻¹ Vᵀ`.
    pub fn covariance(&self, factor: &CholeskyFactor) -> Result<DenseSymmetric, LinalgError> {
        let v = &self.prior.range_basis;
        let vp = v.matmul(factor.inverse().as_matrix())?;
        Ok(vp.matmul(&v.transpose())?.symmetrized())
    }
}

/// Posterior precision pieces at one linearization point.
struct Linearized {
    /// Likelihood curvature `−∂²ln π(y_i | η_i)` per observation.
    curvature: Vec<f64>,
    b: Vec<f64>,
}

fn linearize(model: &LatentModel, y: &[f64], theta: &[f64], x: &[f64]) -> Result<Linearized, InferenceError> {
    let eta = model.linear_predictor(x)?;
    let (g, h) = model.likelihood_derivatives(&eta, y, theta)?;
    let rhs: Vec<f64> = (0..eta.len()).map(|i| g[i] + h[i] * eta[i]).collect();
    let b = model.design().t_matvec(&rhs)?;
    Ok(Linearized { curvature: h, b })
}

/// Joint log density `ln π(y | x, θ) − ½ xᵀQx`, the Newton objective.
fn newton_objective(model: &LatentModel, y: &[f64], theta: &[f64], x: &[f64]) -> Result<f64, InferenceError> {
    let eta = model.linear_predictor(x)?;
    let ll = match model.log_likelihood(&eta, y, theta) {
        Ok(v) => v,
        Err(ModelError::OverflowGuard { .. }) => f64::NEG_INFINITY,
        Err(e) => return Err(e.into()),
    };
    Ok(ll - 0.5 * model.prior_quad_form(theta, x)?)
}

enum Solved {
    Full { factor: CholeskyFactor },
    Range { factor: CholeskyFactor },
}

fn solve_step(
    model: &LatentModel,
    theta: &[f64],
    prior: &PriorForm,
    lin: &Linearized,
) -> Result<(Vec<f64>, Solved), InferenceError> {
    match prior {
        PriorForm::Full { .. } => {
            let q_like = model.design().weighted_gram(&lin.curvature)?;
            let q_star = model.assemble_prior_precision(theta)?.add(&q_like)?;
            let factor = cholesky(&q_star)?;
            let x = factor.solve(&lin.b)?;
            Ok((x, Solved::Full { factor }))
        }
        PriorForm::Pseudo(sys) => {
            let factor = sys.factor(&lin.curvature)?;
            let x = sys.solve(&factor, &lin.b)?;
            Ok((x, Solved::Range { factor }))
        }
    }
}

/// Newton iterations on the conditional mode with the
/// likelihood replaced by its second-order expansion at the current point.
///
/// Rank-deficient priors go through `Q⁺` and the Woodbury covariance
/// (evaluated in range coordinates, see [`RangeSystem`]), so the mode and
/// covariance stay on the prior range without forming any constraint
/// matrix. `want_cov` controls whether `Σ*` is returned.
pub fn gaussian_approx(
    model: &LatentModel,
    y: &[f64],
    theta: &[f64],
    opts: &GaOptions,
    want_cov: bool,
) -> Result<ConditionalPosterior, InferenceError> {
    model.check_theta(theta)?;
    model.check_data(y)?;
    let s = model.latent_size();
    let prior = if model.rank_deficiency() == 0 {
        PriorForm::Full { log_det: model.prior_log_pdet(theta)? }
    } else {
        PriorForm::Pseudo(RangeSystem::new(model, model.prior_pseudo_inverse(theta)?)?)
    };
    let quadratic = model.likelihood().is_gaussian();

    let mut x = alloc::vec![0.0; s];
    let mut psi = newton_objective(model, y, theta, &x)?;
    let mut iterations = 0;
    let mut converged = false;
    let mut last: Option<Solved> = None;
    while iterations < opts.max_iter {
        iterations += 1;
        let lin = linearize(model, y, theta, &x)?;
        let (mut candidate, solved) = solve_step(model, theta, &prior, &lin)?;
        if quadratic {
            x = candidate;
            last = Some(solved);
            converged = true;
            break;
        }
        // damped Newton: halve until the joint log density does not drop
        let mut cand_psi = newton_objective(model, y, theta, &candidate)?;
        let mut halvings = 0;
        while !(cand_psi >= psi - 1e-12 * math::abs(psi)) && halvings < 40 {
            for (c, xo) in candidate.iter_mut().zip(&x) {
                *c = 0.5 * (*c + xo);
            }
            cand_psi = newton_objective(model, y, theta, &candidate)?;
            halvings += 1;
        }
        let delta = candidate.iter().zip(&x).map(|(a, b)| math::abs(a - b)).fold(0.0, f64::max);
        x = candidate;
        psi = cand_psi;
        if !delta.is_finite() {
            return Err(InferenceError::NonFinite("Gaussian approximation mode"));
        }
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(InferenceError::GaussianApproxDiverged { iterations });
    }
    // Q* evaluated at the mode itself keeps ln π̃(θ|y) smooth in θ.
    let solved = match last {
        Some(s) => s,
        None => solve_step(model, theta, &prior, &linearize(model, y, theta, &x)?)?.1,
    };

    let eta = model.linear_predictor(&x)?;
    let log_lik = model.log_likelihood(&eta, y, theta)?;
    let quad = model.prior_quad_form(theta, &x)?;
    let log_prior = model.hyper_log_prior(theta)?;
    let (log_density, cov, constrained) = match (&prior, solved) {
        (PriorForm::Full { log_det }, Solved::Full { factor }) => {
            let cov = want_cov.then(|| factor.inverse());
            (log_prior + 0.5 * log_det - 0.5 * factor.log_det() - 0.5 * quad + log_lik, cov, false)
        }
        (PriorForm::Pseudo(sys), Solved::Range { factor }) => {
            // ln pdet Σ* = −ln det P
            let ld = log_prior + 0.5 * sys.prior.log_pdet - 0.5 * factor.log_det() - 0.5 * quad + log_lik;
            let cov = if want_cov { Some(sys.covariance(&factor)?) } else { None };
            (ld, cov, true)
        }
        _ => unreachable!("prior form and solve path always agree"),
    };
    if !log_density.is_finite() {
        return Err(InferenceError::NonFinite("Laplace log density"));
    }
    Ok(ConditionalPosterior { theta: theta.to_vec(), mean: x, cov, log_density, iterations, constrained })
}

/// `ln pdet Σ` for `Σ` whose null space is spanned by the orthonormal
/// columns of `n`: equals `ln det(Σ + N Nᵀ)`.
pub fn pseudo_log_det(cov: &DenseSymmetric, n: &Matrix) -> Result<f64, InferenceError> {
    let nnt = n.matmul(&n.transpose())?.symmetrized();
    Ok(cholesky(&cov.add(&nnt)?)?.log_det())
}

/// `diag(A Σ Aᵀ)`, the marginal variances of the linear predictor.
pub fn predictor_variances(design: &Matrix, cov: &DenseSymmetric) -> Result<Vec<f64>, InferenceError> {
    let mut out = Vec::with_capacity(design.rows());
    for i in 0..design.rows() {
        let a = design.row(i);
        let nz: Vec<usize> = (0..a.len()).filter(|&j| a[j] != 0.0).collect();
        let mut v = 0.0;
        for &j in &nz {
            let row = cov.as_matrix().row(j);
            let mut inner = 0.0;
            for &k in &nz {
                inner += row[k] * a[k];
            }
            v += a[j] * inner;
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}
