use super::{lu, DenseSymmetric, LinalgError};

/// Relative pivot threshold for the inner `(I + Q_like Q⁺)` system.
const INNER_PIVOT_TOL: f64 = 1e-13;

/// Posterior covariance from a prior pseudo-inverse and a likelihood precision:
///
/// `Σ* = Q⁺ − Q⁺ (I + Q_like Q⁺)⁻¹ Q_like Q⁺`
///
/// When the prior is rank deficient the result lives on the range of `Q⁺`,
/// so every constraint spanning the prior null space is satisfied exactly.
pub fn woodbury_posterior_cov(
    prior_pinv: &DenseSymmetric,
    q_like: &DenseSymmetric,
) -> Result<DenseSymmetric, LinalgError> {
    let n = prior_pinv.n();
    if q_like.n() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: q_like.n() });
    }
    let p = prior_pinv.as_matrix();
    let lp = q_like.as_matrix().matmul(p)?;
    let mut inner = lp.clone();
    for i in 0..n {
        inner[(i, i)] += 1.0;
    }
    let factor = lu::lu(&inner, INNER_PIVOT_TOL).map_err(|e| match e {
        LinalgError::Singular { pivot } => LinalgError::SingularInnerSystem { pivot },
        other => other,
    })?;
    let solved = factor.solve_matrix(&lp);
    let correction = p.matmul(&solved)?;
    Ok(p.sub(&correction)?.symmetrized())
}

/// Same update written against an explicit inverse, `(Q + Q_like)⁻¹`, used
/// where a full-rank prior makes the direct route available.
pub fn direct_posterior_cov(
    prior: &DenseSymmetric,
    q_like: &DenseSymmetric,
) -> Result<DenseSymmetric, LinalgError> {
    let sum = prior.add(q_like)?;
    Ok(super::cholesky(&sum)?.inverse())
}
