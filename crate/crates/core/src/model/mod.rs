//! Latent Gaussian model definition: components, design matrix, likelihood
//! and hyperparameter priors.

mod component;
mod graph;
mod likelihood;
mod prior;

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

pub use component::{ComponentKind, LatentComponent, Precision};
pub use graph::Graph;
pub use likelihood::{Likelihood, ObsTerms, OVERFLOW_LIMIT};
pub use prior::HyperPriorSpec;

use crate::linalg::{DenseSymmetric, LinalgError, Matrix};
use crate::math;

/// Prior precision given to intercepts and fixed slopes unless overridden.
pub const DEFAULT_FIXED_EFFECT_PRECISION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("latent component has size zero")]
    EmptyComponent,
    #[error("invalid graph edge {node} -> {neighbor}")]
    InvalidGraph { node: usize, neighbor: usize },
    #[error("design matrix has {found} columns, latent field has {expected}")]
    DesignColumns { expected: usize, found: usize },
    #[error("design matrix contains a non-finite entry")]
    NonFiniteDesign,
    #[error("hyperparameter index {index} is out of range for {count} priors")]
    HyperIndexOutOfRange { index: usize, count: usize },
    #[error("hyperparameter {index} has a prior but is never used")]
    UnusedHyper { index: usize },
    #[error("invalid prior for hyperparameter {index}")]
    InvalidPrior { index: usize },
    #[error("expected {expected} offsets, found {found}")]
    OffsetLength { expected: usize, found: usize },
    #[error("offset {index} is not strictly positive")]
    NonPositiveOffset { index: usize },
    #[error("theta has length {found}, model has {expected} hyperparameters")]
    ThetaLength { expected: usize, found: usize },
    #[error("expected {expected} values, found {found}")]
    DataLength { expected: usize, found: usize },
    #[error("observation {index} is not valid for the likelihood")]
    InvalidObservation { index: usize },
    #[error("phi * exp(eta) overflows at observation {index}")]
    OverflowGuard { index: usize },
}

/// Pseudo-inverse of the block-diagonal prior precision at a given `θ`.
#[derive(Debug, Clone)]
pub struct PriorPseudoInverse {
    pub pinv: DenseSymmetric,
    /// `s × k` orthonormal basis of the prior null space.
    pub null_basis: Matrix,
    /// `ln pdet Q(θ)`.
    pub log_pdet: f64,
    pub rank: usize,
    /// `s × rank` orthonormal basis `V` of the prior range.
    pub range_basis: Matrix,
    /// Eigenvalues of `Q(θ)` on the range, so `Q = V diag(λ) Vᵀ`.
    pub range_precisions: Vec<f64>,
}

/// Immutable latent Gaussian model; shareable across workers.
#[derive(Debug, Clone)]
pub struct LatentModel {
    components: Vec<LatentComponent>,
    design: Matrix,
    likelihood: Likelihood,
    hyper_priors: Vec<HyperPriorSpec>,
    offsets: Vec<usize>,
}

impl LatentModel {
    pub fn new(
        components: Vec<LatentComponent>,
        design: Matrix,
        likelihood: Likelihood,
        hyper_priors: Vec<HyperPriorSpec>,
    ) -> Result<Self, ModelError> {
        let mut offsets = Vec::with_capacity(components.len() + 1);
        let mut s = 0;
        for c in &components {
            offsets.push(s);
            s += c.size;
        }
        offsets.push(s);
        if design.cols() != s {
            return Err(ModelError::DesignColumns { expected: s, found: design.cols() });
        }
        if !design.is_finite() {
            return Err(ModelError::NonFiniteDesign);
        }
        let t = hyper_priors.len();
        let mut used = vec![false; t];
        let indices = components.iter().filter_map(|c| c.hyper_index()).chain(likelihood.hyper_index());
        for index in indices {
            if index >= t {
                return Err(ModelError::HyperIndexOutOfRange { index, count: t });
            }
            used[index] = true;
        }
        if let Some(index) = used.iter().position(|u| !u) {
            return Err(ModelError::UnusedHyper { index });
        }
        if let Some(index) = hyper_priors.iter().position(|p| !p.is_valid()) {
            return Err(ModelError::InvalidPrior { index });
        }
        if let Likelihood::Poisson { offsets: phi } = &likelihood {
            if phi.len() != design.rows() {
                return Err(ModelError::OffsetLength { expected: design.rows(), found: phi.len() });
            }
            if let Some(index) = phi.iter().position(|p| !(*p > 0.0 && p.is_finite())) {
                return Err(ModelError::NonPositiveOffset { index });
            }
        }
        Ok(Self { components, design, likelihood, hyper_priors, offsets })
    }

    pub fn components(&self) -> &[LatentComponent] {
        &self.components
    }

    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn likelihood(&self) -> &Likelihood {
        &self.likelihood
    }

    pub fn hyper_priors(&self) -> &[HyperPriorSpec] {
        &self.hyper_priors
    }

    /// Number of hyperparameters `t`.
    pub fn n_hyper(&self) -> usize {
        self.hyper_priors.len()
    }

    /// Latent dimension `s`.
    pub fn latent_size(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn n_obs(&self) -> usize {
        self.design.rows()
    }

    /// Index range of component `j` inside `x`.
    pub fn component_range(&self, j: usize) -> Range<usize> {
        self.offsets[j]..self.offsets[j + 1]
    }

    pub fn rank_deficiency(&self) -> usize {
        self.components.iter().map(|c| c.rank_deficiency).sum()
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<(), ModelError> {
        if theta.len() != self.n_hyper() {
            return Err(ModelError::ThetaLength { expected: self.n_hyper(), found: theta.len() });
        }
        Ok(())
    }

    /// Checks length, finiteness and (for Poisson) non-negative integer counts.
    pub fn check_data(&self, y: &[f64]) -> Result<(), ModelError> {
        if y.len() != self.n_obs() {
            return Err(ModelError::DataLength { expected: self.n_obs(), found: y.len() });
        }
        let poisson = !self.likelihood.is_gaussian();
        let bad = y.iter().position(|v| !v.is_finite() || (poisson && (*v < 0.0 || libm::trunc(*v) != *v)));
        match bad {
            Some(index) => Err(ModelError::InvalidObservation { index }),
            None => Ok(()),
        }
    }

    /// `Q(θ) = blockdiag(τ_j R_j)`.
    pub fn assemble_prior_precision(&self, theta: &[f64]) -> Result<DenseSymmetric, ModelError> {
        self.check_theta(theta)?;
        let s = self.latent_size();
        let mut q = Matrix::zeros(s, s);
        for (j, c) in self.components.iter().enumerate() {
            let tau = math::exp(c.log_precision(theta));
            place_block(&mut q, self.offsets[j], c.structure.as_matrix(), tau);
        }
        Ok(q.symmetrized())
    }

    /// `Q(θ)⁺ = blockdiag(R_j⁺ / τ_j)` from the precomputed per-component spectra.
    pub fn prior_pseudo_inverse(&self, theta: &[f64]) -> Result<PriorPseudoInverse, ModelError> {
        self.check_theta(theta)?;
        let s = self.latent_size();
        let k = self.rank_deficiency();
        let mut pinv = Matrix::zeros(s, s);
        let mut null_basis = Matrix::zeros(s, k);
        let mut range_basis = Matrix::zeros(s, s - k);
        let mut range_precisions = Vec::with_capacity(s - k);
        let mut log_pdet = 0.0;
        let mut col = 0;
        for (j, c) in self.components.iter().enumerate() {
            let log_tau = c.log_precision(theta);
            let spec = c.spectral();
            let rb = &spec.range_basis;
            for i in 0..rb.rows() {
                for q in 0..rb.cols() {
                    range_basis[(self.offsets[j] + i, range_precisions.len() + q)] = rb[(i, q)];
                }
            }
            let tau = math::exp(log_tau);
            range_precisions.extend(spec.range_values.iter().map(|v| v * tau));
            place_block(&mut pinv, self.offsets[j], spec.pinv.as_matrix(), math::exp(-log_tau));
            log_pdet += spec.log_pdet + spec.rank as f64 * log_tau;
            let nb = &spec.null_basis;
            for i in 0..nb.rows() {
                for q in 0..nb.cols() {
                    null_basis[(self.offsets[j] + i, col + q)] = nb[(i, q)];
                }
            }
            col += nb.cols();
        }
        Ok(PriorPseudoInverse { pinv: pinv.symmetrized(), null_basis, log_pdet, rank: s - k, range_basis, range_precisions })
    }

    /// `ln pdet Q(θ) = Σ_j (ln pdet R_j + rank_j ln τ_j)`.
    pub fn prior_log_pdet(&self, theta: &[f64]) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        Ok(self
            .components
            .iter()
            .map(|c| c.spectral().log_pdet + c.spectral().rank as f64 * c.log_precision(theta))
            .sum())
    }

    /// `xᵀ Q(θ) x`, evaluated block by block.
    pub fn prior_quad_form(&self, theta: &[f64], x: &[f64]) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        if x.len() != self.latent_size() {
            return Err(ModelError::DataLength { expected: self.latent_size(), found: x.len() });
        }
        let mut total = 0.0;
        for (j, c) in self.components.iter().enumerate() {
            let block = &x[self.component_range(j)];
            total += math::exp(c.log_precision(theta)) * c.structure.quad_form(block)?;
        }
        Ok(total)
    }

    /// `Q(θ) x`, evaluated block by block.
    pub fn prior_matvec(&self, theta: &[f64], x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_theta(theta)?;
        if x.len() != self.latent_size() {
            return Err(ModelError::DataLength { expected: self.latent_size(), found: x.len() });
        }
        let mut out = Vec::with_capacity(x.len());
        for (j, c) in self.components.iter().enumerate() {
            let tau = math::exp(c.log_precision(theta));
            out.extend(c.structure.matvec(&x[self.component_range(j)])?.into_iter().map(|v| tau * v));
        }
        Ok(out)
    }

    /// Prior null-space basis; independent of `θ`.
    pub fn null_basis(&self) -> Matrix {
        let theta = vec![0.0; self.n_hyper()];
        self.prior_pseudo_inverse(&theta).map(|p| p.null_basis).unwrap_or_else(|_| Matrix::zeros(0, 0))
    }

    pub fn linear_predictor(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(self.design.matvec(x)?)
    }

    /// Gradient and negated Hessian diagonal of `ln π(y|η, θ)` in `η`.
    pub fn likelihood_derivatives(
        &self,
        eta: &[f64],
        y: &[f64],
        theta: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        self.check_obs_lengths(eta, y)?;
        let mut grad = Vec::with_capacity(eta.len());
        let mut neg_hess = Vec::with_capacity(eta.len());
        for i in 0..eta.len() {
            let t = self.likelihood.obs_terms(i, eta[i], y[i], theta)?;
            grad.push(t.grad);
            neg_hess.push(t.neg_hess);
        }
        Ok((grad, neg_hess))
    }

    pub fn log_likelihood(&self, eta: &[f64], y: &[f64], theta: &[f64]) -> Result<f64, ModelError> {
        self.check_obs_lengths(eta, y)?;
        let mut total = 0.0;
        for i in 0..eta.len() {
            total += self.likelihood.obs_terms(i, eta[i], y[i], theta)?.log_lik;
        }
        Ok(total)
    }

    /// `ln π(θ)`, summed over independent coordinates.
    pub fn hyper_log_prior(&self, theta: &[f64]) -> Result<f64, ModelError> {
        self.check_theta(theta)?;
        Ok(self.hyper_priors.iter().zip(theta).map(|(p, t)| p.log_density(*t)).sum())
    }

    fn check_obs_lengths(&self, eta: &[f64], y: &[f64]) -> Result<(), ModelError> {
        let n = self.n_obs();
        for len in [eta.len(), y.len()] {
            if len != n {
                return Err(ModelError::DataLength { expected: n, found: len });
            }
        }
        Ok(())
    }
}

fn place_block(target: &mut Matrix, at: usize, block: &Matrix, scale: f64) {
    for i in 0..block.rows() {
        let src = block.row(i);
        let dst = &mut target.row_mut(at + i)[at..at + block.cols()];
        for (d, v) in dst.iter_mut().zip(src) {
            *d = scale * v;
        }
    }
}
