use alloc::vec::Vec;

use super::{LinalgError, Matrix};
use crate::math;

/// Partial-pivoting LU of a general square matrix, `P M = L U`.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: Matrix,
    perm: Vec<usize>,
}

/// Pivots below `rel_tol · max|M|` are treated as singular.
pub fn lu(m: &Matrix, rel_tol: f64) -> Result<LuFactor, LinalgError> {
    if m.rows() != m.cols() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let threshold = rel_tol * f64::max(m.max_abs(), f64::MIN_POSITIVE);
    for k in 0..n {
        let mut p = k;
        let mut best = math::abs(a[(k, k)]);
        for i in (k + 1)..n {
            let v = math::abs(a[(i, k)]);
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= threshold || !best.is_finite() {
            return Err(LinalgError::Singular { pivot: k });
        }
        if p != k {
            perm.swap(p, k);
            let data = a.as_mut_slice();
            for j in 0..n {
                data.swap(k * n + j, p * n + j);
            }
        }
        let pivot = a[(k, k)];
        let (upper, lower) = a.as_mut_slice().split_at_mut((k + 1) * n);
        let row_k = &upper[k * n..];
        for row_i in lower.chunks_exact_mut(n) {
            let factor = row_i[k] / pivot;
            row_i[k] = factor;
            if factor == 0.0 {
                continue;
            }
            for (x, u) in row_i[(k + 1)..].iter_mut().zip(&row_k[(k + 1)..]) {
                *x -= factor * u;
            }
        }
    }
    Ok(LuFactor { lu: a, perm })
}

impl LuFactor {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            x[i] -= math::dot(&row[..i], &x[..i]);
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = x[i] - math::dot(&row[(i + 1)..], &x[(i + 1)..]);
            x[i] = s / row[i];
        }
        x
    }

    /// `M⁻¹ B`, processing all right-hand sides row-wise.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let n = self.n();
        let m = b.cols();
        let mut x = Matrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        let data = x.as_mut_slice();
        // forward: unit lower
        for i in 0..n {
            let (done, rest) = data.split_at_mut(i * m);
            let row_i = &mut rest[..m];
            let l = self.lu.row(i);
            for k in 0..i {
                let f = l[k];
                if f == 0.0 {
                    continue;
                }
                for (xi, xk) in row_i.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                    *xi -= f * xk;
                }
            }
        }
        // backward: upper
        for i in (0..n).rev() {
            let (head, tail) = data.split_at_mut((i + 1) * m);
            let row_i = &mut head[i * m..];
            let u = self.lu.row(i);
            for k in (i + 1)..n {
                let f = u[k];
                if f == 0.0 {
                    continue;
                }
                let row_k = &tail[(k - i - 1) * m..(k - i) * m];
                for (xi, xk) in row_i.iter_mut().zip(row_k) {
                    *xi -= f * xk;
                }
            }
            let d = u[i];
            row_i.iter_mut().for_each(|v| *v /= d);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let m = Matrix::from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]).unwrap();
        let f = lu(&m, 1e-14).unwrap();
        let x = f.solve(&[3.0, 2.0, 4.0]);
        let back = m.matvec(&x).unwrap();
        for (a, b) in back.iter().zip([3.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let inv = f.solve_matrix(&Matrix::identity(3));
        assert!(m.matmul(&inv).unwrap().max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn singular_is_reported() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(lu(&m, 1e-12), Err(LinalgError::Singular { pivot: 1 })));
    }
}
