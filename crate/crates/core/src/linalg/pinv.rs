use alloc::vec::Vec;

use super::{symmetric_eigen, DenseSymmetric, LinalgError, Matrix, SymmetricEigen};
use crate::math;

/// Default zero-eigenvalue cutoff, relative to the largest eigenvalue.
pub const DEFAULT_PINV_TOL: f64 = 1e-9;

/// Moore–Penrose inverse of a symmetric PSD matrix together with the
/// orthonormal basis of the dropped eigenspace.
#[derive(Debug, Clone)]
pub struct PseudoInverseResult {
    pub pinv: DenseSymmetric,
    pub rank: usize,
    /// `n × (n − rank)`, orthonormal columns.
    pub null_basis: Matrix,
    /// Sum of `ln λ` over the retained eigenvalues.
    pub log_pdet: f64,
    /// Retained eigenpairs (`range_values[k]` belongs to column `k` of `range_basis`).
    pub range_values: Vec<f64>,
    pub range_basis: Matrix,
}

pub fn pseudo_inverse(m: &DenseSymmetric, tol: f64) -> Result<PseudoInverseResult, LinalgError> {
    let eig = symmetric_eigen(m)?;
    Ok(PseudoInverseResult::from_eigen(&eig, tol))
}

impl PseudoInverseResult {
    /// Splits an eigendecomposition at `tol · λ_max`.
    pub fn from_eigen(eig: &SymmetricEigen, tol: f64) -> Self {
        let n = eig.n();
        let lambda_max = eig.values.iter().fold(0.0, |m: f64, v| m.max(*v));
        let cutoff = tol * lambda_max;
        let keep: Vec<bool> = eig.values.iter().map(|v| lambda_max > 0.0 && *v > cutoff).collect();
        let rank = keep.iter().filter(|k| **k).count();
        let mut null_basis = Matrix::zeros(n, n - rank);
        let mut range_basis = Matrix::zeros(n, rank);
        let mut range_values = Vec::with_capacity(rank);
        let (mut nc, mut rc) = (0, 0);
        for (k, kept) in keep.iter().enumerate() {
            if *kept {
                for i in 0..n {
                    range_basis[(i, rc)] = eig.vectors[(i, k)];
                }
                range_values.push(eig.values[k]);
                rc += 1;
            } else {
                for i in 0..n {
                    null_basis[(i, nc)] = eig.vectors[(i, k)];
                }
                nc += 1;
            }
        }
        let pinv = eig.reassemble_with(|v| if lambda_max > 0.0 && v > cutoff { 1.0 / v } else { 0.0 });
        let log_pdet = range_values.iter().map(|v| math::ln(*v)).sum();
        Self { pinv, rank, null_basis, log_pdet, range_values, range_basis }
    }

    pub fn n(&self) -> usize {
        self.pinv.n()
    }

    pub fn deficiency(&self) -> usize {
        self.n() - self.rank
    }
}
