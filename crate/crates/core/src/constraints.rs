//! Identifiability: sum-to-zero constraint counting for interaction models,
//! conditioning by kriging and the null-space constraint set that the
//! pseudo-inverse path satisfies implicitly.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{
    cholesky, direct_posterior_cov, pseudo_inverse, woodbury_posterior_cov, DenseSymmetric, LinalgError, Matrix,
    PseudoInverseResult, DEFAULT_PINV_TOL,
};
use crate::math;
use crate::model::{ComponentKind, Graph};

/// Rows whose residual norm after orthogonalization falls below this
/// (relative to the original norm) are treated as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("constraint row {row} is linearly dependent on earlier rows")]
    DegenerateConstraints { row: usize },
    #[error("constraints have {found} columns, covariance is {expected}x{expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// `k × s` linear constraints `C x = 0`, stored with orthonormal rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    matrix: Matrix,
}

impl ConstraintSet {
    /// Orthonormalizes the rows of `c` (modified Gram–Schmidt).
    pub fn new(c: Matrix) -> Result<Self, ConstraintError> {
        let (k, s) = (c.rows(), c.cols());
        let mut q = c;
        for i in 0..k {
            let original = math::norm2(q.row(i));
            for j in 0..i {
                let proj = math::dot(q.row(i), q.row(j));
                let (head, tail) = q.as_mut_slice().split_at_mut(i * s);
                let rj = &head[j * s..(j + 1) * s];
                for (a, b) in tail[..s].iter_mut().zip(rj) {
                    *a -= proj * b;
                }
            }
            let norm = math::norm2(q.row(i));
            if !(norm > DEPENDENCE_TOL * original) || original == 0.0 {
                return Err(ConstraintError::DegenerateConstraints { row: i });
            }
            q.row_mut(i).iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self { matrix: q })
    }

    pub fn empty(s: usize) -> Self {
        Self { matrix: Matrix::zeros(0, s) }
    }

    /// `C = Nᵀ` for an orthonormal null basis `N` (`s × k`).
    pub fn from_null_basis(basis: &Matrix) -> Self {
        Self { matrix: basis.transpose() }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn k(&self) -> usize {
        self.matrix.rows()
    }

    pub fn s(&self) -> usize {
        self.matrix.cols()
    }

    /// `max |C x|`.
    pub fn residual(&self, x: &[f64]) -> Result<f64, ConstraintError> {
        Ok(math::max_abs(&self.matrix.matvec(x)?))
    }
}

/// Constraints spanning the prior null space: `C = null_basisᵀ`.
pub fn null_space_constraints(prior: &PseudoInverseResult) -> ConstraintSet {
    ConstraintSet::from_null_basis(&prior.null_basis)
}

/// Multiply counts of the kriging routines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KrigingOps {
    /// Forming `V = Σ Cᵀ` (dense: `s²k`).
    pub projection: u64,
    /// Everything after `V`: `W = C V`, its Cholesky factor, the solves and
    /// the update. This is the `O(s k²)` part.
    pub correction: u64,
}

struct Projected {
    v: Matrix,
    w_factor: crate::linalg::CholeskyFactor,
    ops: KrigingOps,
}

fn project(cov: &DenseSymmetric, c: &ConstraintSet) -> Result<Projected, ConstraintError> {
    let (s, k) = (cov.n(), c.k());
    if c.s() != s {
        return Err(ConstraintError::DimensionMismatch { expected: s, found: c.s() });
    }
    let cm = c.matrix();
    let mut v = Matrix::zeros(s, k);
    for i in 0..s {
        let row = cov.as_matrix().row(i);
        for q in 0..k {
            v[(i, q)] = math::dot(row, cm.row(q));
        }
    }
    let mut w = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            w[(a, b)] = (0..s).map(|i| cm[(a, i)] * v[(i, b)]).sum();
        }
    }
    let w_factor = cholesky(&w.symmetrized()).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { pivot, .. } => ConstraintError::DegenerateConstraints { row: pivot },
        other => other.into(),
    })?;
    let (s64, k64) = (s as u64, k as u64);
    let ops = KrigingOps {
        projection: s64 * s64 * k64,
        correction: k64 * k64 * s64 + k64 * (k64 * k64 + 3 * k64 + 2) / 6,
    };
    Ok(Projected { v, w_factor, ops })
}

/// Rows of `L⁻¹ Vᵀ` as an `s × k` matrix (row `i` solves `L y = V_i`).
fn whiten(p: &mut Projected) -> Matrix {
    let (s, k) = (p.v.rows(), p.v.cols());
    let mut y = p.v.clone();
    for i in 0..s {
        p.w_factor.forward_substitute(y.row_mut(i));
    }
    p.ops.correction += (s * k * (k + 1) / 2) as u64;
    y
}

/// `Σ − Σ Cᵀ (C Σ Cᵀ)⁻¹ C Σ` together with its multiply counts.
pub fn kriging_correct_counted(
    cov: &DenseSymmetric,
    c: &ConstraintSet,
) -> Result<(DenseSymmetric, KrigingOps), ConstraintError> {
    let mut p = project(cov, c)?;
    let y = whiten(&mut p);
    let s = cov.n();
    let mut out = cov.as_matrix().clone();
    for i in 0..s {
        for j in 0..=i {
            let d = math::dot(y.row(i), y.row(j));
            out[(i, j)] -= d;
            if i != j {
                out[(j, i)] -= d;
            }
        }
    }
    p.ops.correction += (s * (s + 1) / 2 * c.k()) as u64;
    Ok((out.symmetrized(), p.ops))
}

pub fn kriging_correct(cov: &DenseSymmetric, c: &ConstraintSet) -> Result<DenseSymmetric, ConstraintError> {
    if c.k() == 0 {
        return Ok(cov.clone());
    }
    kriging_correct_counted(cov, c).map(|r| r.0)
}

/// Only the conditioned marginal variances, which is all the latent
/// marginals need. The correction costs `≈ 3/2 s k² + k³/6`.
pub fn kriging_marginal_variances(
    cov: &DenseSymmetric,
    c: &ConstraintSet,
) -> Result<(Vec<f64>, KrigingOps), ConstraintError> {
    let mut p = project(cov, c)?;
    let y = whiten(&mut p);
    let var = cov.diagonal().iter().enumerate().map(|(i, v)| v - math::dot(y.row(i), y.row(i))).collect();
    p.ops.correction += (cov.n() * c.k()) as u64;
    Ok((var, p.ops))
}

/// Conditioned mean `μ − Σ Cᵀ (C Σ Cᵀ)⁻¹ C μ`.
pub fn kriging_mean(mean: &[f64], cov: &DenseSymmetric, c: &ConstraintSet) -> Result<Vec<f64>, ConstraintError> {
    if c.k() == 0 {
        return Ok(mean.to_vec());
    }
    let p = project(cov, c)?;
    let cm = c.matrix().matvec(mean)?;
    let lambda = p.w_factor.solve(&cm)?;
    let shift = p.v.matvec(&lambda)?;
    Ok(mean.iter().zip(shift).map(|(m, d)| m - d).collect())
}

/// Jittered unconstrained covariance `(Q + εI + Q_like)⁻¹` conditioned on `C`;
/// the reference the pseudo-inverse path is checked against.
pub fn jittered_kriging_cov(
    prior: &DenseSymmetric,
    q_like: &DenseSymmetric,
    c: &ConstraintSet,
    jitter: f64,
) -> Result<DenseSymmetric, ConstraintError> {
    let unconstrained = direct_posterior_cov(&prior.add_diagonal(jitter), q_like)?;
    kriging_correct(&unconstrained, c)
}

/// Both ways of getting the constrained posterior covariance for one
/// prior/likelihood pair.
#[derive(Debug, Clone)]
pub struct PathComparison {
    pub s: usize,
    /// Prior rank deficiency, i.e. the number of implied constraints.
    pub k: usize,
    pub jitter: f64,
    /// Woodbury update on `Q⁺`; never forms `C`.
    pub pinv_cov: DenseSymmetric,
    /// `(Q + εI + Q_like)⁻¹` conditioned on the null-space constraints.
    pub kriging_cov: DenseSymmetric,
    pub max_gap: f64,
    /// Approximate multiply count of the Woodbury update, `3s³ + s³/3`.
    pub pinv_ops: u64,
    pub kriging_ops: KrigingOps,
}

/// Runs the pseudo-inverse path and the jittered kriging path. A full-rank
/// prior gets no jitter and no constraints, so the paths coincide.
pub fn compare_paths(prior: &DenseSymmetric, q_like: &DenseSymmetric, jitter: f64) -> Result<PathComparison, ConstraintError> {
    let s = prior.n();
    let pinv = pseudo_inverse(prior, DEFAULT_PINV_TOL)?;
    let pinv_cov = woodbury_posterior_cov(&pinv.pinv, q_like)?;
    let c = null_space_constraints(&pinv);
    let k = c.k();
    let (kriging_cov, kriging_ops, jitter) = if k == 0 {
        (direct_posterior_cov(prior, q_like)?, KrigingOps::default(), 0.0)
    } else {
        let un = direct_posterior_cov(&prior.add_diagonal(jitter), q_like)?;
        let (cov, ops) = kriging_correct_counted(&un, &c)?;
        (cov, ops, jitter)
    };
    let max_gap = pinv_cov.max_abs_diff(&kriging_cov);
    let s3 = (s as u64).pow(3);
    Ok(PathComparison { s, k, jitter, pinv_cov, kriging_cov, max_gap, pinv_ops: 3 * s3 + s3 / 3, kriging_ops })
}

/// Random-walk order of a structured axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Axis {
    pub n: usize,
    /// 1 or 2.
    pub order: usize,
}

impl Axis {
    pub fn new(n: usize, order: usize) -> Self {
        Self { n, order }
    }

    /// Null-space dimension of the axis' random walk.
    fn deficiency(&self) -> usize {
        self.order.min(self.n)
    }

    fn kind(&self) -> ComponentKind {
        if self.order >= 2 {
            ComponentKind::Rw2(self.n)
        } else {
            ComponentKind::Rw1(self.n)
        }
    }
}

/// Main effects and interactions of a time/age/space model with
/// fully structured (type IV) interactions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionPlan {
    pub time: Option<Axis>,
    pub age: Option<Axis>,
    /// Number of areas of a connected Besag graph.
    pub space: Option<usize>,
    pub time_age: bool,
    pub time_space: bool,
    pub space_age: bool,
    pub three_way: bool,
}

impl InteractionPlan {
    /// Time (`rw2`) plus space with their interaction.
    pub fn time_space(n_t: usize, n_s: usize) -> Self {
        Self {
            time: Some(Axis::new(n_t, 2)),
            space: Some(n_s),
            time_space: true,
            ..Self::default()
        }
    }

    /// Time, age and space mains with every pairwise and the three-way term.
    pub fn full(time: Axis, age: Axis, n_s: usize) -> Self {
        Self {
            time: Some(time),
            age: Some(age),
            space: Some(n_s),
            time_age: true,
            time_space: true,
            space_age: true,
            three_way: true,
        }
    }

    fn active(&self) -> (Option<(usize, usize)>, Option<(usize, usize)>, Option<(usize, usize)>) {
        (
            self.time.map(|a| (a.n, a.deficiency())),
            self.age.map(|a| (a.n, a.deficiency())),
            self.space.map(|n| (n, 1.min(n))),
        )
    }

    /// Number of constraints `k` needed to identify every structured term.
    pub fn count_constraints(&self) -> usize {
        let (t, a, s) = self.active();
        let pair = |x: Option<(usize, usize)>, y: Option<(usize, usize)>, on: bool| match (x, y, on) {
            (Some((nx, ox)), Some((ny, oy)), true) => nx * ny - (nx - ox) * (ny - oy),
            _ => 0,
        };
        let mains: usize = [t, a, s].iter().flatten().map(|(_, o)| o).sum();
        let three = match (t, a, s, self.three_way) {
            (Some((nt, ot)), Some((na, oa)), Some((ns, os)), true) => {
                nt * na * ns - (nt - ot) * (na - oa) * (ns - os)
            }
            _ => 0,
        };
        mains + pair(t, a, self.time_age) + pair(t, s, self.time_space) + pair(s, a, self.space_age) + three
    }

    /// Latent dimension `s`: intercept, linear trends of order-2 axes,
    /// main effects and interactions.
    pub fn latent_dimension(&self) -> usize {
        let (nt, na, ns) = (self.time.map(|a| a.n), self.age.map(|a| a.n), self.space);
        let trends = [self.time, self.age].iter().flatten().filter(|a| a.order >= 2).count();
        let mains: usize = [nt, na, ns].iter().flatten().sum();
        let prod = |x: Option<usize>, y: Option<usize>, on: bool| if on { x.unwrap_or(0) * y.unwrap_or(0) } else { 0 };
        let three = if self.three_way { nt.unwrap_or(0) * na.unwrap_or(0) * ns.unwrap_or(0) } else { 0 };
        1 + trends
            + mains
            + prod(nt, na, self.time_age)
            + prod(nt, ns, self.time_space)
            + prod(ns, na, self.space_age)
            + three
    }

    /// Latent blocks in declaration order. `graph` supplies the Besag
    /// structure when the plan has a space axis.
    pub fn components(&self, graph: Option<&Graph>) -> Vec<(String, ComponentKind)> {
        let mut out: Vec<(String, ComponentKind)> = vec![("intercept".into(), ComponentKind::Intercept)];
        for (name, axis) in [("time", self.time), ("age", self.age)] {
            if axis.is_some_and(|a| a.order >= 2) {
                out.push((alloc::format!("{name}_trend"), ComponentKind::FixedSlope));
            }
        }
        let space = self.space.map(|n| match graph {
            Some(g) => ComponentKind::Besag(g.clone()),
            None => ComponentKind::Besag(path_graph(n)),
        });
        let t = self.time.map(|a| a.kind());
        let a = self.age.map(|a| a.kind());
        for (name, kind) in [("time", &t), ("age", &a), ("space", &space)] {
            if let Some(k) = kind {
                out.push((name.into(), k.clone()));
            }
        }
        let mut pair = |name: &str, x: &Option<ComponentKind>, y: &Option<ComponentKind>, on: bool| {
            if let (Some(x), Some(y), true) = (x, y, on) {
                out.push((name.into(), ComponentKind::kron2(x.clone(), y.clone())));
            }
        };
        pair("time_age", &t, &a, self.time_age);
        pair("time_space", &t, &space, self.time_space);
        pair("space_age", &space, &a, self.space_age);
        if let (Some(t), Some(a), Some(s), true) = (&t, &a, &space, self.three_way) {
            out.push(("time_age_space".into(), ComponentKind::kron3(t.clone(), a.clone(), s.clone())));
        }
        out
    }
}

/// Path graph on `n` nodes (connected).
pub fn path_graph(n: usize) -> Graph {
    let lists = (0..n).map(|i| if i + 1 < n { vec![i + 1] } else { Vec::new() }).collect();
    Graph::from_neighbors(lists).expect("path edges are in range")
}
