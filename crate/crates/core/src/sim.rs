//! Seeded synthetic data: random connected Besag graphs, spatio-temporal
//! Poisson counts, crossed random effects and nested/crossed covariances.
//!
//! All randomness comes from PCG-XSL-RR 128/64 (`rand_pcg::Pcg64`) seeded
//! with `(seed, stream)`, so outputs are a pure function of the inputs.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rand_pcg::Pcg64;

use crate::constraints::InteractionPlan;
use crate::linalg::{cholesky, DenseSymmetric, LinalgError, Matrix};
use crate::math;
use crate::model::{
    ComponentKind, Graph, HyperPriorSpec, LatentComponent, LatentModel, Likelihood, ModelError, Precision,
    DEFAULT_FIXED_EFFECT_PRECISION,
};

/// Largest number of graph draws before giving up.
pub const MAX_REDRAWS: usize = 10_000;

/// Stream ids separating independent uses of one seed.
pub mod streams {
    pub const GRAPH: u128 = 1;
    pub const LATENT: u128 = 2;
    pub const COUNTS: u128 = 3;
    pub const CROSSED: u128 = 4;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("no connected graph after {attempts} draws")]
    MaxRedraws { attempts: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("expected {expected} log-precisions, found {found}")]
    ThetaLength { expected: usize, found: usize },
}

/// Generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u128) -> Pcg64 {
    Pcg64::new(0xcafe_f00d_d15e_a5e5_u128 ^ ((seed as u128) << 64 | seed as u128), stream)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BesagGraph {
    pub graph: Graph,
    pub seed: u64,
    /// Draws needed to reach a connected graph.
    pub attempts: usize,
}

/// Draws `n²` Bernoulli(`p`) edges, symmetrizes by OR, clears the diagonal
/// and redraws until the graph is connected.
pub fn random_besag_graph(n: usize, p: f64, seed: u64) -> Result<BesagGraph, SimError> {
    let mut r = rng(seed, streams::GRAPH);
    for attempt in 1..=MAX_REDRAWS {
        let draws: Vec<bool> = (0..n * n).map(|_| r.random_bool(p)).collect();
        let mut adj = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && (draws[i * n + j] || draws[j * n + i]) {
                    adj[(i, j)] = 1.0;
                }
            }
        }
        let graph = Graph::from_adjacency(&adj)?;
        if graph.connected_components() == 1 {
            return Ok(BesagGraph { graph, seed, attempts: attempt });
        }
    }
    Err(SimError::MaxRedraws { attempts: MAX_REDRAWS })
}

/// Inputs of a spatio-temporal scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub plan: InteractionPlan,
    /// Log-precision of every structured component, in declaration order.
    pub log_precisions: Vec<f64>,
    pub intercept: f64,
    /// Coefficient of every linear trend.
    pub trend: f64,
    /// Besag edge probability.
    pub edge_prob: f64,
    pub seed: u64,
}

/// Generated data with its truth.
#[derive(Debug, Clone)]
pub struct SimScenario {
    pub spec: ScenarioSpec,
    pub graph: Option<Graph>,
    /// Component names and kinds in latent order.
    pub components: Vec<(alloc::string::String, ComponentKind)>,
    pub design: Matrix,
    pub truth: Vec<f64>,
    pub eta: Vec<f64>,
    pub y: Vec<f64>,
    /// Per observation `(time, age, space)` cell indices; absent axes are 0.
    pub cells: Vec<[usize; 3]>,
}

/// Centered trend covariate for index `i` of `n`.
pub fn trend_covariate(i: usize, n: usize) -> f64 {
    i as f64 - (n as f64 - 1.0) / 2.0
}

/// One observation per `(time, age, space)` cell with `y ~ Poisson(e^η)`.
/// Structured blocks are drawn from their intrinsic priors on the range of
/// `R`, so every sample satisfies its sum-to-zero constraints exactly.
pub fn simulate_spacetime(spec: &ScenarioSpec) -> Result<SimScenario, SimError> {
    let plan = &spec.plan;
    let graph = match plan.space {
        Some(n) => Some(random_besag_graph(n, spec.edge_prob, spec.seed)?.graph),
        None => None,
    };
    let components = plan.components(graph.as_ref());
    let structured = components.iter().filter(|(_, k)| !k.is_fixed_effect()).count();
    if spec.log_precisions.len() != structured {
        return Err(SimError::ThetaLength { expected: structured, found: spec.log_precisions.len() });
    }
    let nt = plan.time.map_or(1, |a| a.n);
    let na = plan.age.map_or(1, |a| a.n);
    let ns = plan.space.unwrap_or(1);

    let mut latent_rng = rng(spec.seed, streams::LATENT);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut truth = Vec::new();
    let mut offsets = Vec::new();
    let mut hyper = 0;
    for (name, kind) in &components {
        offsets.push(truth.len());
        if kind.is_fixed_effect() {
            truth.push(if name == "intercept" { spec.intercept } else { spec.trend });
            continue;
        }
        let log_tau = spec.log_precisions[hyper];
        hyper += 1;
        let c = LatentComponent::new(name.as_str(), kind.clone(), Precision::Fixed(log_tau))?;
        let spectral = c.spectral();
        let scale = if log_tau.is_infinite() && log_tau > 0.0 { 0.0 } else { math::exp(-0.5 * log_tau) };
        let mut x = vec![0.0; c.size];
        for (k, lambda) in spectral.range_values.iter().enumerate() {
            let zk = normal.sample(&mut latent_rng) * scale / math::sqrt(*lambda);
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += zk * spectral.range_basis[(i, k)];
            }
        }
        truth.extend(x);
    }

    let s = truth.len();
    let n_obs = nt * na * ns;
    let mut design = Matrix::zeros(n_obs, s);
    let mut cells = Vec::with_capacity(n_obs);
    let mut row = 0;
    for ti in 0..nt {
        for ai in 0..na {
            for si in 0..ns {
                let r = design.row_mut(row);
                for ((name, kind), &off) in components.iter().zip(&offsets) {
                    let col = match name.as_str() {
                        "intercept" => Some((off, 1.0)),
                        "time_trend" => Some((off, trend_covariate(ti, nt))),
                        "age_trend" => Some((off, trend_covariate(ai, na))),
                        "time" => Some((off + ti, 1.0)),
                        "age" => Some((off + ai, 1.0)),
                        "space" => Some((off + si, 1.0)),
                        "time_age" => Some((off + ti * na + ai, 1.0)),
                        "time_space" => Some((off + ti * ns + si, 1.0)),
                        "space_age" => Some((off + si * na + ai, 1.0)),
                        "time_age_space" => Some((off + (ti * na + ai) * ns + si, 1.0)),
                        _ => None,
                    };
                    debug_assert!(col.is_some() || kind.size() == 0);
                    if let Some((c, v)) = col {
                        r[c] = v;
                    }
                }
                cells.push([ti, ai, si]);
                row += 1;
            }
        }
    }
    let eta = design.matvec(&truth)?;
    let mut count_rng = rng(spec.seed, streams::COUNTS);
    let y = eta
        .iter()
        .map(|e| {
            let mu = math::exp(*e);
            if mu > 0.0 && mu.is_finite() {
                Poisson::new(mu).map(|d| d.sample(&mut count_rng)).unwrap_or(0.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(SimScenario { spec: spec.clone(), graph, components, design, truth, eta, y, cells })
}

impl SimScenario {
    /// Poisson model of the scenario with one hyperparameter per structured
    /// component, all sharing `prior`.
    pub fn latent_model(&self, prior: HyperPriorSpec) -> Result<LatentModel, SimError> {
        let mut comps = Vec::with_capacity(self.components.len());
        let mut t = 0;
        for (name, kind) in &self.components {
            let precision = if kind.is_fixed_effect() {
                Precision::Fixed(math::ln(DEFAULT_FIXED_EFFECT_PRECISION))
            } else {
                t += 1;
                Precision::Hyper(t - 1)
            };
            comps.push(LatentComponent::new(name.as_str(), kind.clone(), precision)?);
        }
        let lik = Likelihood::Poisson { offsets: vec![1.0; self.y.len()] };
        Ok(LatentModel::new(comps, self.design.clone(), lik, vec![prior; t])?)
    }
}

/// Crossed two-factor example with `y ~ N(A x, I)`.
#[derive(Debug, Clone)]
pub struct CrossedSim {
    pub y: Vec<f64>,
    /// `n × 2m`: level `i` of the first factor and `j` of the second.
    pub design: Matrix,
    /// `x* = (AᵀA + τI)⁻¹ Aᵀ y`.
    pub posterior_mean: Vec<f64>,
    /// Structurally nonzero fraction of `Q* = AᵀA + τI`.
    pub density: f64,
}

pub fn simulate_crossed(n: usize, m: usize, tau: f64, seed: u64) -> Result<CrossedSim, SimError> {
    let mut r = rng(seed, streams::CROSSED);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let effects: Vec<f64> = (0..2 * m).map(|_| normal.sample(&mut r)).collect();
    let mut design = Matrix::zeros(n, 2 * m);
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        let i = r.random_range(0..m);
        let j = r.random_range(0..m);
        design[(k, i)] = 1.0;
        design[(k, m + j)] = 1.0;
        y.push(effects[i] + effects[m + j] + normal.sample(&mut r));
    }
    let q_star = design.weighted_gram(&vec![1.0; n])?.add_diagonal(tau);
    let posterior_mean = cholesky(&q_star)?.solve(&design.t_matvec(&y)?)?;
    let s = 2 * m;
    let density = q_star.structural_nonzeros() as f64 / (s * s) as f64;
    Ok(CrossedSim { y, design, posterior_mean, density })
}

/// Variance components for [`crossed_vs_nested_cov`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceComponents {
    pub plate: f64,
    pub sample: f64,
    pub residual: f64,
}

/// Marginal covariance of `n_plates × n_samples` observations, ordered
/// sample-major. Nested: every observation has its own plate within its
/// sample, giving sample blocks. Crossed: plates are shared across samples.
pub fn crossed_vs_nested_cov(
    n_plates: usize,
    n_samples: usize,
    v: VarianceComponents,
) -> (DenseSymmetric, DenseSymmetric) {
    let n = n_plates * n_samples;
    let mut nested = Matrix::zeros(n, n);
    let mut crossed = Matrix::zeros(n, n);
    for a in 0..n {
        let (sa, pa) = (a / n_plates, a % n_plates);
        for b in 0..n {
            let (sb, pb) = (b / n_plates, b % n_plates);
            let same_sample = if sa == sb { v.sample } else { 0.0 };
            let diag = if a == b { v.residual } else { 0.0 };
            nested[(a, b)] = same_sample + diag + if a == b { v.plate } else { 0.0 };
            crossed[(a, b)] = same_sample + diag + if pa == pb { v.plate } else { 0.0 };
        }
    }
    (nested.symmetrized(), crossed.symmetrized())
}
