use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::InferenceError;
use crate::model::LatentModel;
use crate::schedule::{Executor, Stage, TaskBatch, TaskEvaluator};
use crate::stage2::{gaussian_approx, ConditionalPosterior, GaOptions};

/// Batched access to an unnormalized log density over `θ`. Stage-1
/// algorithms only talk to this, so they run unchanged against analytic
/// test functions or the scheduled Laplace objective.
pub trait BatchObjective {
    fn dim(&self) -> usize;

    /// Log densities at `points`, in order.
    fn log_densities(&self, stage: Stage, points: Vec<Vec<f64>>) -> Result<Vec<f64>, InferenceError>;

    fn log_density(&self, stage: Stage, theta: &[f64]) -> Result<f64, InferenceError> {
        Ok(self.log_densities(stage, vec![theta.to_vec()])?[0])
    }
}

/// Laplace objective `ln π̃(θ | y)` for a model and data set.
pub struct HyperObjective<'a> {
    model: &'a LatentModel,
    y: &'a [f64],
    ga: GaOptions,
    cache: spin::Mutex<BTreeMap<Vec<u64>, f64>>,
}

impl<'a> HyperObjective<'a> {
    pub fn new(model: &'a LatentModel, y: &'a [f64], ga: GaOptions) -> Result<Self, InferenceError> {
        model.check_data(y)?;
        Ok(Self { model, y, ga, cache: spin::Mutex::new(BTreeMap::new()) })
    }

    pub fn model(&self) -> &'a LatentModel {
        self.model
    }

    pub fn data(&self) -> &'a [f64] {
        self.y
    }

    pub fn ga_options(&self) -> &GaOptions {
        &self.ga
    }

    /// Full conditional at `θ` (covariance omitted).
    pub fn eval_log_post(&self, theta: &[f64]) -> Result<ConditionalPosterior, InferenceError> {
        gaussian_approx(self.model, self.y, theta, &self.ga, false)
    }

    /// `ln π̃(θ | y)`, memoized on the exact bit pattern of `θ`.
    pub fn log_density(&self, theta: &[f64]) -> Result<f64, InferenceError> {
        let key: Vec<u64> = theta.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.lock().get(&key) {
            return Ok(*v);
        }
        let v = self.eval_log_post(theta)?.log_density;
        self.cache.lock().insert(key, v);
        Ok(v)
    }
}

impl TaskEvaluator for HyperObjective<'_> {
    fn evaluate(&self, _stage: Stage, payload: &[f64]) -> Result<Vec<f64>, String> {
        self.log_density(payload).map(|v| vec![v]).map_err(|e| e.to_string())
    }
}

/// Dispatches objective batches through an executor. Results come back in
/// task order; the first entry of each is the log density.
pub struct Scheduled<'a> {
    pub eval: &'a dyn TaskEvaluator,
    pub executor: &'a dyn Executor,
    pub dim: usize,
}

impl BatchObjective for Scheduled<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_densities(&self, stage: Stage, points: Vec<Vec<f64>>) -> Result<Vec<f64>, InferenceError> {
        let batch = TaskBatch::new(stage, points);
        let results = self.executor.run(&batch, self.eval)?;
        results
            .into_iter()
            .map(|r| r.first().copied().ok_or(InferenceError::MalformedResult { expected: 1, found: 0 }))
            .collect()
    }
}

/// Closure-backed objective that counts evaluations.
pub struct Analytic<F> {
    dim: usize,
    f: F,
    count: Cell<usize>,
}

impl<F: Fn(&[f64]) -> f64> Analytic<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f, count: Cell::new(0) }
    }

    pub fn evaluations(&self) -> usize {
        self.count.get()
    }

    pub fn reset(&self) {
        self.count.set(0);
    }
}

impl<F: Fn(&[f64]) -> f64> BatchObjective for Analytic<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_densities(&self, _stage: Stage, points: Vec<Vec<f64>>) -> Result<Vec<f64>, InferenceError> {
        self.count.set(self.count.get() + points.len());
        Ok(points.iter().map(|p| (self.f)(p)).collect())
    }
}
