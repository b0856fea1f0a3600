use alloc::vec::Vec;

use super::{DenseSymmetric, LinalgError, Matrix, SymmetricEigen};

/// Largest Kronecker product dimension built by default (dense storage is
/// `n²` doubles, so 40 000 is already 12.8 GB).
pub const DEFAULT_KRON_CAP: usize = 40_000;

/// `a ⊗ b`: entry `(i·n_b + k, j·n_b + l) = a(i,j)·b(k,l)`.
pub fn kronecker(a: &DenseSymmetric, b: &DenseSymmetric) -> Result<DenseSymmetric, LinalgError> {
    kronecker_capped(a, b, DEFAULT_KRON_CAP)
}

pub fn kronecker_capped(
    a: &DenseSymmetric,
    b: &DenseSymmetric,
    cap: usize,
) -> Result<DenseSymmetric, LinalgError> {
    let n = a.n().checked_mul(b.n()).filter(|n| *n <= cap);
    let Some(_) = n else {
        return Err(LinalgError::DimensionOverflow { requested: a.n().saturating_mul(b.n()), cap });
    };
    Ok(kron_matrix(a.as_matrix(), b.as_matrix()).symmetrized())
}

/// General Kronecker product of two row-major matrices.
pub fn kron_matrix(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = Matrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                let row = out.row_mut(i * br + k);
                let brow = b.row(k);
                for l in 0..bc {
                    row[j * bc + l] = aij * brow[l];
                }
            }
        }
    }
    out
}

/// Eigendecomposition of `a ⊗ b` from those of the factors: eigenvalues are
/// the pairwise products, eigenvectors the Kronecker products of eigenvectors.
pub fn kron_eigen(a: &SymmetricEigen, b: &SymmetricEigen) -> SymmetricEigen {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.n() * b.n());
    for (i, va) in a.values.iter().enumerate() {
        for (k, vb) in b.values.iter().enumerate() {
            pairs.push((va * vb, i, k));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let n = pairs.len();
    let nb = b.n();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &(_, i, k)) in pairs.iter().enumerate() {
        for r in 0..a.n() {
            let ar = a.vectors[(r, i)];
            if ar == 0.0 {
                continue;
            }
            for q in 0..nb {
                vectors[(r * nb + q, col)] = ar * b.vectors[(q, k)];
            }
        }
    }
    SymmetricEigen { values: pairs.iter().map(|p| p.0).collect(), vectors }
}
