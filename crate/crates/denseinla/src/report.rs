//! Fit outputs: `report.json` (validated by `schema/report.schema.json`),
//! `latent_marginals.csv`, `hyper_marginals.csv` and `run.json`.
//!
//! `report.json` and the CSVs depend only on the inputs and the seed.
//! Worker counts and wall-clock timings go to `run.json`, which is the
//! only output allowed to differ between otherwise identical runs.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use denseinla_core::fit::FitResult;
use serde::Serialize;

/// Shipped JSON schema for `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

pub const QUANTILES: [f64; 3] = [0.025, 0.5, 0.975];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub spec: String,
    pub data: String,
    pub strategy: String,
    pub approx: String,
    pub seed: u64,
    pub plan_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeEcho {
    pub theta: Vec<f64>,
    pub log_density: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperSummary {
    pub index: usize,
    pub mode: f64,
    pub mean: f64,
    pub sd: f64,
    /// `[θ, density]` pairs.
    pub grid: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatentSummary {
    pub index: usize,
    pub component: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DicEcho {
    pub dic: f64,
    pub p_eff: f64,
    pub mean_deviance: f64,
    pub deviance_at_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEcho {
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub design_weight: f64,
    pub weight: f64,
    pub log_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluations {
    pub mode: usize,
    pub hessian: usize,
    pub scalings: usize,
    pub exploration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub config: ConfigEcho,
    pub mode: ModeEcho,
    pub hyper: Vec<HyperSummary>,
    pub latent: Vec<LatentSummary>,
    pub log_marginal_likelihood: f64,
    pub dic: DicEcho,
    pub constraint_residual: f64,
    pub points: Vec<PointEcho>,
    pub evaluations: Evaluations,
}

impl FitReport {
    pub fn new(result: &FitResult, labels: &[String], config: ConfigEcho) -> Self {
        let latent = result
            .latent
            .iter()
            .map(|m| {
                let [a, b, c] = QUANTILES.map(|p| m.quantile(p));
                LatentSummary {
                    index: m.index,
                    component: labels.get(m.index).cloned().unwrap_or_default(),
                    mean: m.mean,
                    sd: m.sd,
                    q025: a,
                    q50: b.max(a),
                    q975: c.max(b).max(a),
                }
            })
            .collect();
        let hyper = result
            .hyper
            .iter()
            .map(|h| HyperSummary {
                index: h.index,
                mode: result.mode.theta[h.index],
                mean: h.mean,
                sd: h.sd,
                grid: h.grid.iter().map(|&(x, d)| [x, d]).collect(),
            })
            .collect();
        let points = result
            .points
            .iter()
            .map(|p| PointEcho {
                theta: p.theta.clone(),
                z: p.z.clone(),
                design_weight: p.design_weight,
                weight: p.weight,
                log_density: p.log_density,
            })
            .collect();
        let e = &result.evaluations;
        Self {
            config,
            mode: ModeEcho {
                theta: result.mode.theta.clone(),
                log_density: result.mode.log_density,
                iterations: result.mode.iterations,
            },
            hyper,
            latent,
            log_marginal_likelihood: result.log_marginal_likelihood,
            dic: DicEcho {
                dic: result.dic.dic,
                p_eff: result.dic.p_eff,
                mean_deviance: result.dic.mean_deviance,
                deviance_at_mean: result.dic.deviance_at_mean,
            },
            constraint_residual: result.constraint_residual,
            points,
            evaluations: Evaluations { mode: e.mode, hessian: e.hessian, scalings: e.scalings, exploration: e.exploration },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn latent_csv(&self) -> String {
        let mut out = String::from("index,component,mean,sd,q0.025,q0.5,q0.975\n");
        for l in &self.latent {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                l.index,
                l.component,
                fmt_f64(l.mean),
                fmt_f64(l.sd),
                fmt_f64(l.q025),
                fmt_f64(l.q50),
                fmt_f64(l.q975)
            );
        }
        out
    }

    pub fn hyper_csv(&self) -> String {
        let mut out = String::from("hyper,theta,density\n");
        for h in &self.hyper {
            for [x, d] in &h.grid {
                let _ = writeln!(out, "{},{},{}", h.index, fmt_f64(*x), fmt_f64(*d));
            }
        }
        out
    }
}

/// Non-reproducible facts about one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub pool: String,
    pub workers: usize,
    pub threads_per_worker: usize,
    /// `(stage, seconds)` in completion order.
    pub timings: Vec<(String, f64)>,
    pub total_seconds: f64,
}

/// Writes every file into a fresh staging directory and renames it into
/// place, so a failure leaves no partial outputs behind.
pub fn write_outputs(out: &Path, files: &[(&str, String)]) -> io::Result<()> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent)?;
    let name = out.file_name().map_or_else(|| "out".into(), |n| n.to_string_lossy().into_owned());
    let staging = parent.join(format!(".{name}.partial-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&staging);
    std::fs::create_dir_all(&staging)?;
    let result = (|| {
        for (file, body) in files {
            std::fs::write(staging.join(file), body)?;
        }
        if out.exists() {
            // merge into an existing directory file by file
            for (file, _) in files {
                std::fs::rename(staging.join(file), out.join(file))?;
            }
            std::fs::remove_dir(&staging)
        } else {
            std::fs::rename(&staging, out)
        }
    })();
    if result.is_err() {
        let _ = std::fs::remove_dir_all(&staging);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count(), 17);
        }
    }
}
