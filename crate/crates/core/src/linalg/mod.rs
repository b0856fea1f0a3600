//! Dense symmetric linear algebra: Cholesky, eigendecomposition,
//! Moore–Penrose pseudo-inverse, the Woodbury-form posterior covariance and
//! Kronecker products. Everything is stored dense and row-major.

mod cholesky;
mod eigen;
mod kron;
mod lu;
mod matrix;
mod pinv;
mod woodbury;

pub use cholesky::{cholesky, CholeskyFactor};
pub use eigen::{symmetric_eigen, tridiagonal_eigen, SymmetricEigen};
pub use kron::{kron_eigen, kron_matrix, kronecker, kronecker_capped, DEFAULT_KRON_CAP};
pub use lu::{lu, LuFactor};
pub use matrix::{DenseSymmetric, Matrix, SYMMETRY_TOL};
pub use pinv::{pseudo_inverse, PseudoInverseResult, DEFAULT_PINV_TOL};
pub use woodbury::{direct_posterior_cov, woodbury_posterior_cov};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col}), gap {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("non-finite matrix entry")]
    NonFiniteInput,
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix is numerically singular at pivot {pivot}")]
    Singular { pivot: usize },
    #[error("inner Woodbury system (I + Q_like Q+) is singular at pivot {pivot}")]
    SingularInnerSystem { pivot: usize },
    #[error("eigenvalue iteration did not converge for index {index}")]
    EigenNoConvergence { index: usize },
    #[error("Kronecker dimension {requested} exceeds cap {cap}")]
    DimensionOverflow { requested: usize, cap: usize },
}
