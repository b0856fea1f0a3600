//! Textbook dense routines used as independent oracles, deliberately not
//! sharing code with the library.
#![allow(dead_code)]

/// Row-major square matrix as nested vectors.
pub type Dense = Vec<Vec<f64>>;

/// Gauss–Jordan elimination with partial pivoting; returns `(A⁻¹ B, ln|det A|)`.
pub fn solve_many(a: &Dense, b: &Dense) -> (Dense, f64) {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut aug: Dense = (0..n).map(|i| a[i].iter().chain(&b[i]).copied().collect()).collect();
    let mut log_det = 0.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs())).unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        assert!(p != 0.0, "singular oracle system");
        log_det += p.abs().ln();
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..n + m {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    (aug.into_iter().map(|row| row[n..].to_vec()).collect(), log_det)
}

pub fn solve(a: &Dense, b: &[f64]) -> Vec<f64> {
    let rhs: Dense = b.iter().map(|v| vec![*v]).collect();
    solve_many(a, &rhs).0.into_iter().map(|r| r[0]).collect()
}

pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let eye: Dense = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    solve_many(a, &eye).0
}

pub fn log_det(a: &Dense) -> f64 {
    solve_many(a, &vec![Vec::new(); a.len()]).1
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect()).collect()
}

pub fn transpose(a: &Dense) -> Dense {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

pub fn to_dense(m: &denseinla_core::linalg::Matrix) -> Dense {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}
