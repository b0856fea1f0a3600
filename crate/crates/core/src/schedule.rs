//! Deterministic task distribution. Tasks carry dense ids `0..T`, workers
//! take them round-robin and results are always reduced in id order, so the
//! outcome never depends on the worker count.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Pipeline stage a batch belongs to; also the tag byte on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    GradientForward,
    GradientCentral,
    Hessian,
    Exploration,
    LatentPerPoint,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::GradientForward,
        Stage::GradientCentral,
        Stage::Hessian,
        Stage::Exploration,
        Stage::LatentPerPoint,
    ];

    pub fn code(self) -> u8 {
        match self {
            Stage::GradientForward => 0,
            Stage::GradientCentral => 1,
            Stage::Hessian => 2,
            Stage::Exploration => 3,
            Stage::LatentPerPoint => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::GradientForward => "gradient_forward",
            Stage::GradientCentral => "gradient_central",
            Stage::Hessian => "hessian",
            Stage::Exploration => "exploration",
            Stage::LatentPerPoint => "latent_per_point",
        }
    }
}

/// Ordered tasks of one stage; task `i` has id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskBatch {
    pub stage: Stage,
    pub tasks: Vec<Vec<f64>>,
}

impl TaskBatch {
    pub fn new(stage: Stage, tasks: Vec<Vec<f64>>) -> Self {
        Self { stage, tasks }
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScheduleError {
    #[error("task {task_id} failed: {message}")]
    WorkerFailure { task_id: usize, message: String },
    #[error("worker pool needs at least one worker")]
    NoWorkers,
}

/// Round-robin assignment: worker `w` gets every task with `id % workers == w`.
pub fn assign(n_tasks: usize, workers: usize) -> Vec<Vec<usize>> {
    let workers = workers.max(1);
    let mut out = vec![Vec::new(); workers];
    for id in 0..n_tasks {
        out[id % workers].push(id);
    }
    out
}

/// Worker count that matches the evaluation layout of a stage.
///
/// `p` is the number of exploration points; `cap` bounds the Hessian stage.
pub fn recommended_workers(stage: Stage, t: usize, p: usize, cap: usize) -> usize {
    let n = match stage {
        Stage::GradientForward => t + 1,
        Stage::GradientCentral => 2 * t + 1,
        Stage::Hessian => (2 * (t * t + t)).min(cap),
        Stage::Exploration | Stage::LatentPerPoint => p,
    };
    n.max(1)
}

/// Pure task body shared by every worker.
pub trait TaskEvaluator: Sync {
    fn evaluate(&self, stage: Stage, payload: &[f64]) -> Result<Vec<f64>, String>;
}

impl<F> TaskEvaluator for F
where
    F: Fn(Stage, &[f64]) -> Result<Vec<f64>, String> + Sync,
{
    fn evaluate(&self, stage: Stage, payload: &[f64]) -> Result<Vec<f64>, String> {
        self(stage, payload)
    }
}

/// Runs batches and returns results ordered by task id.
pub trait Executor {
    fn workers(&self) -> usize;

    fn run(&self, batch: &TaskBatch, eval: &dyn TaskEvaluator) -> Result<Vec<Vec<f64>>, ScheduleError>;
}

/// Single worker on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn workers(&self) -> usize {
        1
    }

    fn run(&self, batch: &TaskBatch, eval: &dyn TaskEvaluator) -> Result<Vec<Vec<f64>>, ScheduleError> {
        batch
            .tasks
            .iter()
            .enumerate()
            .map(|(task_id, t)| {
                eval.evaluate(batch.stage, t).map_err(|message| ScheduleError::WorkerFailure { task_id, message })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_tasks_five_workers() {
        let a = assign(6, 5);
        assert_eq!(a[0], vec![0, 5]);
        assert!(a[1..].iter().all(|w| w.len() == 1));
    }

    #[test]
    fn recommended_counts() {
        assert_eq!(recommended_workers(Stage::GradientCentral, 6, 0, 64), 13);
        assert_eq!(recommended_workers(Stage::Exploration, 6, 45, 64), 45);
        assert_eq!(recommended_workers(Stage::GradientForward, 1, 0, 64), 2);
        assert_eq!(recommended_workers(Stage::Hessian, 6, 0, 64), 64);
    }

    #[test]
    fn stage_codes_round_trip() {
        for s in Stage::ALL {
            assert_eq!(Stage::from_code(s.code()), Some(s));
        }
        assert_eq!(Stage::from_code(9), None);
    }

    #[test]
    fn sequential_preserves_order() {
        let batch = TaskBatch::new(Stage::Exploration, (0..5).map(|i| vec![i as f64]).collect());
        let f = |_: Stage, p: &[f64]| Ok(p.to_vec());
        let out = Sequential.run(&batch, &f).unwrap();
        assert_eq!(out, batch.tasks);
    }
}
