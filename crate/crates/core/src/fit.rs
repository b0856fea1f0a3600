//! End-to-end fit: mode, Hessian and scalings in stage 1, then the
//! exploration plan, per-point conditionals and their integration.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::InferenceError;
use crate::linalg::Matrix;
use crate::math;
use crate::model::{HyperPriorSpec, LatentModel};
use crate::schedule::{Executor, Stage, TaskBatch, TaskEvaluator};
use crate::stage1::{
    find_mode, fit_asymmetric_scalings, hessian_at_mode, hyper_marginal, log_marginal_likelihood, BfgsOptions,
    HyperMarginal, HyperObjective, HyperPosture, ModeResult, Scheduled, ZFrame, AGI_DELTA,
    HESSIAN_STEP, HYPER_GRID_POINTS,
};
use crate::stage2::{
    build_plan, deviance, dic, expected_deviance, gauss_hermite, gaussian_approx, integrate_marginals,
    mixture_weights, predictor_variances, vb_correct_mean, Dic, ExplorationPlan, GaOptions, LatentMarginal,
    PlanPoint, Strategy, VbOptions,
};

/// Latent conditional used at each plan point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approx {
    /// Gaussian approximation at the conditional mode.
    Gaussian,
    /// Gaussian approximation followed by the variational mean correction.
    VariationalBayes,
}

impl Approx {
    pub fn name(self) -> &'static str {
        match self {
            Approx::Gaussian => "ga",
            Approx::VariationalBayes => "vba",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// `None` picks CCD for `t ≥ 3` and the grid below.
    pub strategy: Option<Strategy>,
    pub approx: Approx,
    pub bfgs: BfgsOptions,
    pub ga: GaOptions,
    pub vb: VbOptions,
    pub hessian_step: f64,
    pub agi_delta: f64,
    pub hyper_grid_points: usize,
    /// Starting point; defaults to the mode of each hyperparameter prior.
    pub theta0: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            strategy: None,
            approx: Approx::VariationalBayes,
            bfgs: BfgsOptions::default(),
            ga: GaOptions::default(),
            vb: VbOptions::default(),
            hessian_step: HESSIAN_STEP,
            agi_delta: AGI_DELTA,
            hyper_grid_points: HYPER_GRID_POINTS,
            theta0: None,
        }
    }
}

/// Mode of a hyperparameter prior on the log-precision scale.
pub fn prior_mode(prior: &HyperPriorSpec) -> f64 {
    match *prior {
        // d/dθ [−θ/2 − λ e^{−θ/2}] = 0  ⇒  θ = 2 ln λ
        HyperPriorSpec::PcPrecision { u, alpha } => 2.0 * math::ln(-math::ln(alpha) / u),
        HyperPriorSpec::Gaussian { mean, .. } => mean,
    }
}

/// Pipeline step reported with a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStage {
    Mode,
    Hessian,
    Scalings,
    Exploration,
    Integration,
}

impl FitStage {
    pub fn name(self) -> &'static str {
        match self {
            FitStage::Mode => "mode",
            FitStage::Hessian => "hessian",
            FitStage::Scalings => "scalings",
            FitStage::Exploration => "exploration",
            FitStage::Integration => "integration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("inference failed in stage {}: {source}", stage.name())]
pub struct FitError {
    pub stage: FitStage,
    pub source: InferenceError,
}

trait AtStage<T> {
    fn at(self, stage: FitStage) -> Result<T, FitError>;
}

impl<T, E: Into<InferenceError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: FitStage) -> Result<T, FitError> {
        self.map_err(|e| FitError { stage, source: e.into() })
    }
}

/// Evaluates every task kind of a fit; shared read-only by all workers.
pub struct FitEvaluator<'a> {
    objective: HyperObjective<'a>,
    approx: Approx,
    vb: VbOptions,
}

/// Decoded result of one latent-per-point task.
#[derive(Debug, Clone, PartialEq)]
pub struct PointOutcome {
    pub log_density: f64,
    pub expected_deviance: f64,
    pub ga_iterations: usize,
    pub vb_iterations: usize,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl PointOutcome {
    const HEADER: usize = 4;

    pub fn encode(&self) -> Vec<f64> {
        let mut out = vec![self.log_density, self.expected_deviance, self.ga_iterations as f64, self.vb_iterations as f64];
        out.extend_from_slice(&self.mean);
        out.extend_from_slice(&self.var);
        out
    }

    pub fn decode(v: &[f64], s: usize) -> Result<Self, InferenceError> {
        let expected = Self::HEADER + 2 * s;
        if v.len() != expected {
            return Err(InferenceError::MalformedResult { expected, found: v.len() });
        }
        Ok(Self {
            log_density: v[0],
            expected_deviance: v[1],
            ga_iterations: v[2] as usize,
            vb_iterations: v[3] as usize,
            mean: v[Self::HEADER..Self::HEADER + s].to_vec(),
            var: v[Self::HEADER + s..].to_vec(),
        })
    }
}

impl<'a> FitEvaluator<'a> {
    pub fn new(model: &'a LatentModel, y: &'a [f64], opts: &FitOptions) -> Result<Self, InferenceError> {
        Ok(Self { objective: HyperObjective::new(model, y, opts.ga)?, approx: opts.approx, vb: opts.vb })
    }

    pub fn objective(&self) -> &HyperObjective<'a> {
        &self.objective
    }

    /// Gaussian approximation, optional VB correction and expected deviance at `θ`.
    pub fn latent_point(&self, theta: &[f64]) -> Result<PointOutcome, InferenceError> {
        let model = self.objective.model();
        let y = self.objective.data();
        let cond = gaussian_approx(model, y, theta, self.objective.ga_options(), true)?;
        let cov = cond.cov.as_ref().expect("covariance requested");
        let (mean, vb_iterations) = match self.approx {
            Approx::Gaussian => (cond.mean.clone(), 0),
            Approx::VariationalBayes => {
                let r = vb_correct_mean(model, y, &cond, &self.vb)?;
                (r.mean, r.iterations)
            }
        };
        let eta_var = predictor_variances(model.design(), cov)?;
        let eta_mean = model.linear_predictor(&mean)?;
        let rule = gauss_hermite(self.vb.order);
        let expected_deviance = expected_deviance(model, y, theta, &eta_mean, &eta_var, &rule)?;
        Ok(PointOutcome {
            log_density: cond.log_density,
            expected_deviance,
            ga_iterations: cond.iterations,
            vb_iterations,
            mean,
            var: cov.diagonal(),
        })
    }
}

impl TaskEvaluator for FitEvaluator<'_> {
    fn evaluate(&self, stage: Stage, payload: &[f64]) -> Result<Vec<f64>, String> {
        match stage {
            Stage::LatentPerPoint => self.latent_point(payload).map(|p| p.encode()),
            _ => self.objective.log_density(payload).map(|v| vec![v]),
        }
        .map_err(|e| e.to_string())
    }
}

/// Objective evaluations issued per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvaluationCounts {
    pub mode: usize,
    pub hessian: usize,
    pub scalings: usize,
    pub exploration: usize,
}

/// One plan point after stage 2.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub design_weight: f64,
    /// Normalized posterior mixture weight.
    pub weight: f64,
    pub log_density: f64,
    pub expected_deviance: f64,
    pub ga_iterations: usize,
    pub vb_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub mode: ModeResult,
    /// `None` when the model has no hyperparameters.
    pub posture: Option<HyperPosture>,
    pub strategy: Strategy,
    pub approx: Approx,
    pub points: Vec<PointSummary>,
    pub latent: Vec<LatentMarginal>,
    pub hyper: Vec<HyperMarginal>,
    pub log_marginal_likelihood: f64,
    pub dic: Dic,
    /// `max |Nᵀ x̄|` over the prior null basis `N`; 0 without deficiency.
    pub constraint_residual: f64,
    pub evaluations: EvaluationCounts,
}

/// Runs the whole pipeline with every batch dispatched through `executor`.
pub fn fit(
    model: &LatentModel,
    y: &[f64],
    opts: &FitOptions,
    executor: &dyn Executor,
) -> Result<FitResult, FitError> {
    let evaluator = FitEvaluator::new(model, y, opts).at(FitStage::Mode)?;
    fit_with(model, y, opts, executor, &evaluator)
}

/// As [`fit`], with the task evaluator supplied by the caller (an
/// out-of-process pool ignores it and evaluates in its workers).
pub fn fit_with(
    model: &LatentModel,
    y: &[f64],
    opts: &FitOptions,
    executor: &dyn Executor,
    evaluator: &dyn TaskEvaluator,
) -> Result<FitResult, FitError> {
    fit_observed(model, y, opts, executor, evaluator, &mut |_| {})
}

/// As [`fit_with`]; `done` is called as each stage completes, which lets a
/// std caller attach timings.
pub fn fit_observed(
    model: &LatentModel,
    y: &[f64],
    opts: &FitOptions,
    executor: &dyn Executor,
    evaluator: &dyn TaskEvaluator,
    done: &mut dyn FnMut(FitStage),
) -> Result<FitResult, FitError> {
    let t = model.n_hyper();
    let obj = Scheduled { eval: evaluator, executor, dim: t };
    let mut counts = EvaluationCounts::default();

    let theta0 = opts.theta0.clone().unwrap_or_else(|| model.hyper_priors().iter().map(prior_mode).collect());
    let mode = find_mode(&obj, &theta0, &opts.bfgs).at(FitStage::Mode)?;
    counts.mode = mode.evaluations;
    done(FitStage::Mode);

    let strategy = opts.strategy.unwrap_or(Strategy::default_for(t));
    let (posture, plan) = if t == 0 {
        let plan = ExplorationPlan {
            strategy,
            points: vec![PlanPoint { theta: Vec::new(), z: Vec::new(), weight: 1.0 }],
        };
        (None, plan)
    } else {
        let hess = hessian_at_mode(&obj, &mode.theta, mode.log_density, &mode.basis, opts.hessian_step)
            .at(FitStage::Hessian)?;
        counts.hessian = hess.evaluations;
        let frame = ZFrame::new(mode.theta.clone(), &hess.precision).at(FitStage::Hessian)?;
        done(FitStage::Hessian);
        let scalings = fit_asymmetric_scalings(&obj, &frame, mode.log_density, opts.agi_delta).at(FitStage::Scalings)?;
        counts.scalings = 2 * t;
        done(FitStage::Scalings);
        let plan = build_plan(&frame, strategy).at(FitStage::Exploration)?;
        let posture = HyperPosture {
            frame,
            precision: hess.precision,
            log_density: mode.log_density,
            scalings,
            ridge: hess.ridge,
        };
        (Some(posture), plan)
    };

    let batch = TaskBatch::new(Stage::LatentPerPoint, plan.points.iter().map(|p| p.theta.clone()).collect());
    counts.exploration = batch.len();
    let raw = executor.run(&batch, evaluator).at(FitStage::Exploration)?;
    let s = model.latent_size();
    let outcomes = raw
        .iter()
        .map(|r| PointOutcome::decode(r, s))
        .collect::<Result<Vec<_>, _>>()
        .at(FitStage::Exploration)?;

    done(FitStage::Exploration);
    let out = integrate(model, y, opts, mode, posture, plan, outcomes, counts).at(FitStage::Integration)?;
    done(FitStage::Integration);
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn integrate(
    model: &LatentModel,
    y: &[f64],
    opts: &FitOptions,
    mode: ModeResult,
    posture: Option<HyperPosture>,
    plan: ExplorationPlan,
    outcomes: Vec<PointOutcome>,
    evaluations: EvaluationCounts,
) -> Result<FitResult, InferenceError> {
    let t = model.n_hyper();
    let design_w: Vec<f64> = plan.points.iter().map(|p| p.weight).collect();
    let lds: Vec<f64> = outcomes.iter().map(|o| o.log_density).collect();
    let zs: Vec<Vec<f64>> = plan.points.iter().map(|p| p.z.clone()).collect();
    let weights = mixture_weights(&design_w, &lds, &zs)?;
    let means: Vec<Vec<f64>> = outcomes.iter().map(|o| o.mean.clone()).collect();
    let vars: Vec<Vec<f64>> = outcomes.iter().map(|o| o.var.clone()).collect();
    let latent = integrate_marginals(&weights, &means, &vars)?;

    let frame = match &posture {
        Some(p) => p.frame.clone(),
        None => ZFrame { mode: Vec::new(), vectors: Matrix::zeros(0, 0), values: Vec::new(), transform: Matrix::zeros(0, 0) },
    };
    let log_ml = log_marginal_likelihood(&frame, &design_w, &lds, &zs)?;

    let x_bar: Vec<f64> = latent.iter().map(|m| m.mean).collect();
    let mut theta_bar = vec![0.0; t];
    for (w, p) in weights.iter().zip(&plan.points) {
        for (tb, th) in theta_bar.iter_mut().zip(&p.theta) {
            *tb += w * th;
        }
    }
    let e_dev: Vec<f64> = outcomes.iter().map(|o| o.expected_deviance).collect();
    let dic = dic(&weights, &e_dev, deviance(model, y, &theta_bar, &x_bar)?)?;

    let constraint_residual = if model.rank_deficiency() > 0 {
        math::max_abs(&model.null_basis().t_matvec(&x_bar)?)
    } else {
        0.0
    };
    let hyper = match &posture {
        Some(p) => (0..t).map(|i| hyper_marginal(p, i, opts.hyper_grid_points)).collect(),
        None => Vec::new(),
    };
    let points = plan
        .points
        .iter()
        .zip(&outcomes)
        .zip(&weights)
        .map(|((p, o), w)| PointSummary {
            theta: p.theta.clone(),
            z: p.z.clone(),
            design_weight: p.weight,
            weight: *w,
            log_density: o.log_density,
            expected_deviance: o.expected_deviance,
            ga_iterations: o.ga_iterations,
            vb_iterations: o.vb_iterations,
        })
        .collect();
    Ok(FitResult {
        mode,
        posture,
        strategy: plan.strategy,
        approx: opts.approx,
        points,
        latent,
        hyper,
        log_marginal_likelihood: log_ml,
        dic,
        constraint_residual,
        evaluations,
    })
}
