use alloc::vec::Vec;

use super::{DenseSymmetric, LinalgError, Matrix};
use crate::math;

/// Lower-triangular factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: Matrix,
    log_det: f64,
}

/// Factorizes a symmetric positive-definite matrix.
///
/// A non-positive pivot is reported as [`LinalgError::NotPositiveDefinite`];
/// adding jitter is left to the caller.
pub fn cholesky(m: &DenseSymmetric) -> Result<CholeskyFactor, LinalgError> {
    let n = m.n();
    let src = m.as_matrix();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let (row_j, rest) = l.as_mut_slice()[j * n..].split_at_mut(n);
        let d = src[(j, j)] - math::dot(&row_j[..j], &row_j[..j]);
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = math::sqrt(d);
        row_j[j] = ljj;
        let row_j_head = &row_j[..j];
        for (offset, row_i) in rest.chunks_exact_mut(n).enumerate() {
            let i = j + 1 + offset;
            let s = src[(i, j)] - math::dot(&row_i[..j], row_j_head);
            row_i[j] = s / ljj;
        }
    }
    let log_det = 2.0 * (0..n).map(|i| math::ln(l[(i, i)])).sum::<f64>();
    Ok(CholeskyFactor { lower: l, log_det })
}

impl CholeskyFactor {
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn n(&self) -> usize {
        self.lower.rows()
    }

    /// `ln det M = 2 Σ ln L_ii`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Solves `L y = b` in place.
    pub fn forward_substitute(&self, b: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let row = self.lower.row(i);
            let s = b[i] - math::dot(&row[..i], &b[..i]);
            b[i] = s / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn backward_substitute(&self, y: &mut [f64]) {
        let n = self.n();
        for i in (0..n).rev() {
            y[i] /= self.lower[(i, i)];
            let yi = y[i];
            let row = self.lower.row(i);
            for k in 0..i {
                y[k] -= row[k] * yi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n() {
            return Err(LinalgError::DimensionMismatch { expected: self.n(), found: b.len() });
        }
        let mut x = b.to_vec();
        self.forward_substitute(&mut x);
        self.backward_substitute(&mut x);
        Ok(x)
    }

    /// `M⁻¹ B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Result<Matrix, LinalgError> {
        if b.rows() != self.n() {
            return Err(LinalgError::DimensionMismatch { expected: self.n(), found: b.rows() });
        }
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.column(j))?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// Dense inverse `M⁻¹`.
    pub fn inverse(&self) -> DenseSymmetric {
        let n = self.n();
        let mut out = Matrix::zeros(n, n);
        let mut e = alloc::vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            // only rows >= j of L⁻¹ e_j are nonzero
            for i in j..n {
                let row = self.lower.row(i);
                let s = e[i] - math::dot(&row[j..i], &e[j..i]);
                e[i] = s / row[i];
            }
            self.backward_substitute(&mut e);
            for i in 0..n {
                out[(i, j)] = e[i];
            }
        }
        out.symmetrized()
    }

    /// Reassembles `L Lᵀ`.
    pub fn reconstruct(&self) -> DenseSymmetric {
        let n = self.n();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = math::dot(&self.lower.row(i)[..=j], &self.lower.row(j)[..=j]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out.symmetrized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identity_factor() {
        let f = cholesky(&DenseSymmetric::identity(3)).unwrap();
        assert_eq!(f.lower(), &Matrix::identity(3));
        assert_eq!(f.log_det(), 0.0);
    }

    #[test]
    fn diagonal_factor() {
        let f = cholesky(&DenseSymmetric::from_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(f.lower(), &Matrix::from_diagonal(&[2.0, 3.0]));
        assert!((f.log_det() - math::ln(36.0)).abs() < 1e-15);
    }

    #[test]
    fn random_spd_reconstructs() {
        // AᵀA + I from a fixed pseudo-random 6×6 A
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a = Matrix::from_row_major(6, 6, (0..36).map(|_| next()).collect()).unwrap();
        let m = a.t_matmul(&a).unwrap().symmetrized().add_diagonal(1.0);
        let f = cholesky(&m).unwrap();
        let back = f.reconstruct();
        assert!(back.max_abs_diff(&m) < 1e-10 * m.as_matrix().max_abs());
        let inv = f.inverse();
        let prod = m.as_matrix().matmul(inv.as_matrix()).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(6)) < 1e-12);
    }

    #[test]
    fn indefinite_is_reported() {
        let m = DenseSymmetric::new(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(cholesky(&m), Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })));
    }
}
