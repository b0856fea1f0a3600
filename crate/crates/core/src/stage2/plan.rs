use alloc::vec;
use alloc::vec::Vec;

use crate::error::InferenceError;
use crate::math;
use crate::stage1::ZFrame;

/// Default radial scaling: design points sit at `|z| = F0·√t`.
pub const F0: f64 = 1.1;
/// Largest `t` for which a CCD design is built.
pub const MAX_CCD_DIM: usize = 20;
/// Largest `t` for the grid strategy.
pub const MAX_GRID_DIM: usize = 2;

/// How the hyperparameter space is explored in stage 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Grid,
    Ccd,
    EmpiricalBayes,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Grid => "grid",
            Strategy::Ccd => "ccd",
            Strategy::EmpiricalBayes => "eb",
        }
    }

    /// CCD from three hyperparameters up, the grid below.
    pub fn default_for(t: usize) -> Self {
        if t >= 3 {
            Strategy::Ccd
        } else {
            Strategy::Grid
        }
    }
}

/// A standardized design point with its quadrature weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    pub z: Vec<f64>,
    pub weight: f64,
}

/// Design point mapped to the hyperparameter scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanPoint {
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationPlan {
    pub strategy: Strategy,
    pub points: Vec<PlanPoint>,
}

/// Generator columns over the `m` base factors of a resolution-V
/// two-level fraction, indexed by `m`; bit `b` set means base factor `b`
/// enters the product.
const GENERATORS: [&[u32]; 10] = [
    &[],
    &[],
    &[],
    &[],
    &[0xf],
    &[0x1f],
    &[0x3f, 0x0f, 0x33],
    &[0x7f, 0xf, 0x33, 0x55],
    &[0xff, 0x1f, 0x67, 0xab, 0xd5, 0x2d, 0x59, 0xb1, 0xc3],
    &[0x1ff, 0x3f, 0xcf, 0xf3, 0xfc, 0x157, 0x16d, 0x17a, 0x1d9, 0x5e, 0x6b, 0xb9],
];

/// Largest number of factors a resolution-V two-level design with `2^m`
/// runs can carry.
const MAX_FACTORS_RES_V: [usize; 13] = [0, 1, 2, 3, 5, 6, 8, 11, 17, 23, 33, 47, 65];

/// Smallest `m` so that `2^m` runs carry `t` factors at resolution V.
pub fn ccd_base_factors(t: usize) -> Option<usize> {
    MAX_FACTORS_RES_V.iter().position(|&max| max >= t)
}

/// Number of corner runs `2^m` for `t` factors (0 for `t ≤ 1`).
pub fn ccd_corner_count(t: usize) -> Option<usize> {
    if t <= 1 {
        return Some(0);
    }
    ccd_base_factors(t).map(|m| 1 << m)
}

/// Objective evaluations a CCD needs beyond the already known mode:
/// corners plus `2t` axial points.
pub fn ccd_evaluation_count(t: usize) -> Option<usize> {
    ccd_corner_count(t).map(|c| c + 2 * t)
}

/// Factor bitmasks (over the base factors) of the CCD fraction for `t`.
pub fn ccd_factor_masks(t: usize) -> Result<Vec<u32>, InferenceError> {
    let unsupported = InferenceError::UnsupportedDimension { strategy: "ccd", t, cap: MAX_CCD_DIM };
    if t > MAX_CCD_DIM {
        return Err(unsupported);
    }
    if t <= 1 {
        return Ok(Vec::new());
    }
    let m = ccd_base_factors(t).ok_or(unsupported.clone())?;
    let mut masks: Vec<u32> = (0..m).map(|b| 1 << b).collect();
    let extra = t - m;
    let table = GENERATORS[m];
    // the 8-factor fraction in 64 runs uses the standard pair of generators
    let gens: &[u32] = if m == 6 && extra == 2 { &table[1..3] } else { &table[..extra] };
    if gens.len() != extra {
        return Err(unsupported);
    }
    masks.extend_from_slice(gens);
    Ok(masks)
}

fn parity(x: u32) -> f64 {
    if x.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Standardized design for `t` hyperparameters. The weights integrate a
/// standard Gaussian exactly up to second moments: `Σ w = 1`, `Σ w z = 0`
/// and `Σ w z zᵀ = I`.
pub fn design_points(strategy: Strategy, t: usize) -> Result<Vec<DesignPoint>, InferenceError> {
    let center = DesignPoint { z: vec![0.0; t], weight: 1.0 };
    if t == 0 || strategy == Strategy::EmpiricalBayes {
        return Ok(vec![center]);
    }
    match strategy {
        Strategy::Grid => {
            if t > MAX_GRID_DIM {
                return Err(InferenceError::UnsupportedDimension { strategy: "grid", t, cap: MAX_GRID_DIM });
            }
            // per-axis three-point Gauss–Hermite rule: ±√3 with weight 1/6
            let r = math::sqrt(3.0);
            let mut pts = vec![DesignPoint { z: vec![0.0; t], weight: 1.0 - t as f64 / 3.0 }];
            for i in 0..t {
                for sign in [-1.0, 1.0] {
                    let mut z = vec![0.0; t];
                    z[i] = sign * r;
                    pts.push(DesignPoint { z, weight: 1.0 / 6.0 });
                }
            }
            Ok(pts)
        }
        Strategy::Ccd => {
            let masks = ccd_factor_masks(t)?;
            let n_corners = ccd_corner_count(t).unwrap_or(0);
            let radius = F0 * math::sqrt(t as f64);
            let w = 1.0 / (F0 * F0 * (n_corners + 2 * t) as f64);
            let mut pts = vec![DesignPoint { z: vec![0.0; t], weight: 1.0 - 1.0 / (F0 * F0) }];
            for run in 0..n_corners as u32 {
                // bit b of `run` set means base factor b at its low level
                let z = masks.iter().map(|mask| F0 * parity(run & mask)).collect();
                pts.push(DesignPoint { z, weight: w });
            }
            for i in 0..t {
                for sign in [-1.0, 1.0] {
                    let mut z = vec![0.0; t];
                    z[i] = sign * radius;
                    pts.push(DesignPoint { z, weight: w });
                }
            }
            Ok(pts)
        }
        Strategy::EmpiricalBayes => unreachable!(),
    }
}

/// Maps the standardized design through `θ = θ* + M z`.
pub fn build_plan(frame: &ZFrame, strategy: Strategy) -> Result<ExplorationPlan, InferenceError> {
    let points = design_points(strategy, frame.dim())?
        .into_iter()
        .map(|p| PlanPoint { theta: frame.to_theta(&p.z), z: p.z, weight: p.weight })
        .collect();
    Ok(ExplorationPlan { strategy, points })
}
