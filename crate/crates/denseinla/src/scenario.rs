//! Named simulation presets and their on-disk form: `data.csv`,
//! `model.json` (a fit-ready spec with a `simulation` sidecar), `graph.txt`
//! and `truth.csv`.

use std::fmt::Write as _;

use denseinla_core::constraints::{Axis, InteractionPlan};
use denseinla_core::model::{ComponentKind, Graph, LatentComponent, Precision};
use denseinla_core::sim::{random_besag_graph, simulate_spacetime, trend_covariate, ScenarioSpec, SimError, SimScenario};
use serde_json::json;

use crate::graph_io::format_graph;
use crate::report::fmt_f64;
use crate::spec::{ComponentSpec, GraphSpec, KindSpec, LikelihoodSpec, ModelSpec, PriorSpec};

/// `(name, plan)` for every preset.
pub fn presets() -> Vec<(&'static str, InteractionPlan)> {
    vec![
        ("t5_s20", InteractionPlan::time_space(5, 20)),
        ("t5_s200", InteractionPlan::time_space(5, 200)),
        ("t5_s400", InteractionPlan::time_space(5, 400)),
        ("t5_s800", InteractionPlan::time_space(5, 800)),
        ("spain_3way", InteractionPlan::full(Axis::new(25, 1), Axis::new(9, 1), 50)),
    ]
}

pub fn preset(name: &str) -> Option<InteractionPlan> {
    presets().into_iter().find(|(n, _)| *n == name).map(|(_, p)| p)
}

/// Presets whose dense latent field is small enough to simulate.
pub const MAX_SIMULATED_DIMENSION: usize = 5000;

pub const DEFAULT_INTERCEPT: f64 = 2.0;
pub const DEFAULT_TREND: f64 = 0.1;
pub const DEFAULT_EDGE_PROB: f64 = 0.3;
/// Typical marginal sd of every structured effect in the default truth.
pub const DEFAULT_EFFECT_SD: f64 = 0.5;

pub const PC_U: f64 = 1.0;
pub const PC_ALPHA: f64 = 0.01;

/// Log-precision giving `kind` a geometric-mean marginal sd of `sd`:
/// `ln τ = ln gv(R⁺) − 2 ln sd`, with `gv` the geometric mean of the
/// diagonal of the structure pseudo-inverse.
pub fn typical_log_precision(kind: &ComponentKind, sd: f64) -> f64 {
    let c = LatentComponent::new("probe", kind.clone(), Precision::Fixed(0.0)).expect("valid kind");
    let pinv = &c.spectral().pinv;
    let n = pinv.n();
    let log_gv = (0..n).map(|i| pinv.as_matrix()[(i, i)].max(f64::MIN_POSITIVE).ln()).sum::<f64>() / n as f64;
    log_gv - 2.0 * sd.ln()
}

/// Default truth for `plan`; the graph must be the one the scenario will
/// draw, so it is generated here from the same seed.
pub fn default_spec(plan: InteractionPlan, seed: u64) -> Result<ScenarioSpec, SimError> {
    let graph = match plan.space {
        Some(n) => Some(random_besag_graph(n, DEFAULT_EDGE_PROB, seed)?.graph),
        None => None,
    };
    let log_precisions = plan
        .components(graph.as_ref())
        .iter()
        .filter(|(_, k)| !k.is_fixed_effect())
        .map(|(_, k)| typical_log_precision(k, DEFAULT_EFFECT_SD))
        .collect();
    Ok(ScenarioSpec {
        plan,
        log_precisions,
        intercept: DEFAULT_INTERCEPT,
        trend: DEFAULT_TREND,
        edge_prob: DEFAULT_EDGE_PROB,
        seed,
    })
}

pub fn simulate_preset(name: &str, seed: u64) -> Result<SimScenario, SimError> {
    let plan = preset(name).expect("known preset");
    simulate_spacetime(&default_spec(plan, seed)?)
}

fn axis_kind(kind: &ComponentKind) -> KindSpec {
    match kind {
        ComponentKind::Rw1(n) => KindSpec::Rw1 { n: *n },
        ComponentKind::Rw2(n) => KindSpec::Rw2 { n: *n },
        ComponentKind::Iid(n) => KindSpec::Iid { n: *n },
        ComponentKind::Besag(_) => KindSpec::Besag { graph: GraphSpec::File(GRAPH_FILE.into()) },
        ComponentKind::Kron2(a, b) => KindSpec::Kron { factors: vec![axis_kind(a), axis_kind(b)] },
        ComponentKind::Kron3(a, b, c) => KindSpec::Kron { factors: vec![axis_kind(a), axis_kind(b), axis_kind(c)] },
        ComponentKind::Intercept => KindSpec::Intercept,
        ComponentKind::FixedSlope => unreachable!("slopes carry a covariate"),
    }
}

pub const GRAPH_FILE: &str = "graph.txt";

/// Index columns used by a component named after its axes.
fn index_columns(name: &str) -> Vec<String> {
    name.split('_').map(str::to_owned).collect()
}

/// Fit-ready spec for a simulated scenario.
pub fn scenario_model_spec(sim: &SimScenario, preset: &str) -> ModelSpec {
    let mut hyper = 0;
    let components = sim
        .components
        .iter()
        .map(|(name, kind)| {
            let (kind, index, h) = match kind {
                ComponentKind::Intercept => (KindSpec::Intercept, Vec::new(), None),
                ComponentKind::FixedSlope => {
                    let axis = name.trim_end_matches("_trend");
                    (KindSpec::Fixed { covariate: format!("{axis}_c") }, Vec::new(), None)
                }
                other => {
                    hyper += 1;
                    (axis_kind(other), index_columns(name), Some(hyper - 1))
                }
            };
            ComponentSpec { name: name.clone(), kind, index, hyper: h, log_precision: None }
        })
        .collect();
    let spec = &sim.spec;
    ModelSpec {
        response: "y".into(),
        likelihood: LikelihoodSpec::Poisson { offset: None },
        components,
        hyper_priors: vec![PriorSpec::PcPrecision { u: PC_U, alpha: PC_ALPHA }; hyper],
        simulation: Some(json!({
            "preset": preset,
            "seed": spec.seed,
            "theta_true": spec.log_precisions,
            "intercept": spec.intercept,
            "trend": spec.trend,
            "edge_prob": spec.edge_prob,
            "latent_dimension": spec.plan.latent_dimension(),
            "constraints": spec.plan.count_constraints(),
        })),
    }
}

/// `y`, the index columns of every present axis and centered trend
/// covariates.
pub fn scenario_csv(sim: &SimScenario) -> String {
    let plan = &sim.spec.plan;
    let axes = [("time", plan.time.map(|a| a.n)), ("age", plan.age.map(|a| a.n)), ("space", plan.space)];
    let trends: Vec<(usize, String)> = sim
        .components
        .iter()
        .filter(|(_, k)| matches!(k, ComponentKind::FixedSlope))
        .map(|(n, _)| {
            let axis = n.trim_end_matches("_trend");
            (axes.iter().position(|(a, _)| *a == axis).expect("trend axis"), format!("{axis}_c"))
        })
        .collect();
    let mut header = vec!["y".to_owned()];
    header.extend(axes.iter().filter(|(_, n)| n.is_some()).map(|(a, _)| (*a).to_owned()));
    header.extend(trends.iter().map(|(_, c)| c.clone()));
    let mut out = header.join(",");
    out.push('\n');
    for (y, cell) in sim.y.iter().zip(&sim.cells) {
        let _ = write!(out, "{y}");
        for (k, (_, n)) in axes.iter().enumerate() {
            if n.is_some() {
                let _ = write!(out, ",{}", cell[k]);
            }
        }
        for (k, _) in &trends {
            let _ = write!(out, ",{}", fmt_f64(trend_covariate(cell[*k], axes[*k].1.expect("axis"))));
        }
        out.push('\n');
    }
    out
}

pub fn truth_csv(sim: &SimScenario) -> String {
    let mut labels = Vec::with_capacity(sim.truth.len());
    for (name, kind) in &sim.components {
        labels.extend(std::iter::repeat_n(name.as_str(), kind.size()));
    }
    let mut out = String::from("index,component,value\n");
    for (i, (v, l)) in sim.truth.iter().zip(labels).enumerate() {
        let _ = writeln!(out, "{i},{l},{}", fmt_f64(*v));
    }
    out
}

/// All files of a simulated scenario, ready for [`crate::report::write_outputs`].
pub fn scenario_files(sim: &SimScenario, preset: &str) -> Vec<(&'static str, String)> {
    let mut files = vec![
        ("data.csv", scenario_csv(sim)),
        ("model.json", scenario_model_spec(sim, preset).to_json()),
        ("truth.csv", truth_csv(sim)),
    ];
    if let Some(g) = &sim.graph {
        files.push((GRAPH_FILE, format_graph(g)));
    }
    files
}

/// Only a Besag graph with its structure matrix rows.
pub fn graph_files(g: &Graph, seed: u64) -> Vec<(&'static str, String)> {
    let meta = json!({ "n": g.n(), "seed": seed, "edge_prob": DEFAULT_EDGE_PROB });
    let mut meta = serde_json::to_string_pretty(&meta).expect("json");
    meta.push('\n');
    vec![(GRAPH_FILE, format_graph(g)), ("graph.json", meta)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_counts() {
        let p = preset("t5_s200").unwrap();
        assert_eq!((p.latent_dimension(), p.count_constraints()), (1207, 406));
        assert_eq!(preset("spain_3way").unwrap().count_constraints(), 2010);
    }
}
