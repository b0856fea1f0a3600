//! Symmetric eigendecomposition: Householder reduction to tridiagonal form
//! followed by the implicit QL iteration (the EISPACK `tred2`/`tql2` pair).

use alloc::vec;
use alloc::vec::Vec;

use super::{DenseSymmetric, LinalgError, Matrix};
use crate::math;

/// `M = V diag(values) Vᵀ`, eigenvalues ascending, eigenvectors in the
/// columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

pub fn symmetric_eigen(m: &DenseSymmetric) -> Result<SymmetricEigen, LinalgError> {
    if !m.as_matrix().is_finite() {
        return Err(LinalgError::NonFiniteInput);
    }
    let n = m.n();
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }
    let mut v = m.as_matrix().clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    // rotations in tql2 act on eigenvector columns; work on the transpose so
    // they touch contiguous rows
    let mut vt = v.transpose();
    tql2(&mut d, &mut e, &mut vt)?;
    Ok(sorted(d, vt))
}

/// Eigenpairs of the symmetric tridiagonal matrix with the given diagonal
/// and off-diagonal (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SymmetricEigen, LinalgError> {
    let n = diag.len();
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }
    if off.len() + 1 != n {
        return Err(LinalgError::DimensionMismatch { expected: n - 1, found: off.len() });
    }
    let mut d = diag.to_vec();
    // tql2 expects e[i] to hold the subdiagonal entry of row i (e[0] unused)
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(off);
    let mut vt = Matrix::identity(n);
    tql2(&mut d, &mut e, &mut vt)?;
    Ok(sorted(d, vt))
}

fn sorted(d: Vec<f64>, vt: Matrix) -> SymmetricEigen {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let mut vectors = Matrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &src) in order.iter().enumerate() {
        values.push(d[src]);
        let row = vt.row(src);
        for k in 0..n {
            vectors[(k, col)] = row[k];
        }
    }
    SymmetricEigen { values, vectors }
}

fn tred2(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += math::abs(d[k]);
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = math::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

const MAX_QL_SWEEPS: usize = 60;

/// Implicit QL on the tridiagonal `(d, e)`; `vt` rows are eigenvectors.
fn tql2(d: &mut [f64], e: &mut [f64], vt: &mut Matrix) -> Result<(), LinalgError> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(math::abs(d[l]) + math::abs(e[l]));
        let mut m = l;
        while m < n {
            if math::abs(e[m]) <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(LinalgError::EigenNoConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = math::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = math::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(vt, i, c, s);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if math::abs(e[l]) <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_rows(vt: &mut Matrix, i: usize, c: f64, s: f64) {
    let n = vt.cols();
    let data = vt.as_mut_slice();
    let (lo, hi) = data.split_at_mut((i + 1) * n);
    let row_i = &mut lo[i * n..];
    let row_i1 = &mut hi[..n];
    for (a, b) in row_i.iter_mut().zip(row_i1.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}

impl SymmetricEigen {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Reassembles `V diag(f(λ)) Vᵀ`.
    pub fn reassemble_with(&self, f: impl Fn(f64) -> f64) -> DenseSymmetric {
        let n = self.n();
        let scaled: Vec<f64> = self.values.iter().map(|v| f(*v)).collect();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let w = scaled[k];
            if w == 0.0 {
                continue;
            }
            let col = self.vectors.column(k);
            for i in 0..n {
                let wi = w * col[i];
                if wi == 0.0 {
                    continue;
                }
                let row = out.row_mut(i);
                for (o, c) in row.iter_mut().zip(&col) {
                    *o += wi * c;
                }
            }
        }
        out.symmetrized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random_symmetric(n: usize, seed: u64) -> DenseSymmetric {
        let mut state = seed | 1;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                let v = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        DenseSymmetric::from_matrix(m).unwrap()
    }

    #[test]
    fn reconstructs_random_symmetric() {
        for (n, seed) in [(1, 3), (2, 5), (7, 11), (30, 13)] {
            let m = pseudo_random_symmetric(n, seed);
            let eig = symmetric_eigen(&m).unwrap();
            let back = eig.reassemble_with(|v| v);
            assert!(back.max_abs_diff(&m) < 1e-12, "n = {n}");
            let vtv = eig.vectors.t_matmul(&eig.vectors).unwrap();
            assert!(vtv.max_abs_diff(&Matrix::identity(n)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn path_laplacian_spectrum() {
        // RW1 structure on 4 nodes: eigenvalues 2 - 2cos(kπ/4)
        let m = DenseSymmetric::new(
            4,
            vec![1., -1., 0., 0., -1., 2., -1., 0., 0., -1., 2., -1., 0., 0., -1., 1.],
        )
        .unwrap();
        let eig = symmetric_eigen(&m).unwrap();
        for (k, v) in eig.values.iter().enumerate() {
            let expected = 2.0 - 2.0 * libm::cos(k as f64 * core::f64::consts::PI / 4.0);
            assert!((v - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let diag = [2.0, -1.0, 3.0, 0.5];
        let off = [0.3, 1.2, -0.7];
        let mut m = Matrix::from_diagonal(&diag);
        for (i, o) in off.iter().enumerate() {
            m[(i, i + 1)] = *o;
            m[(i + 1, i)] = *o;
        }
        let dense = symmetric_eigen(&DenseSymmetric::from_matrix(m).unwrap()).unwrap();
        let tri = tridiagonal_eigen(&diag, &off).unwrap();
        for (a, b) in dense.values.iter().zip(&tri.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
