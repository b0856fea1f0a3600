use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::tridiagonal_eigen;
use crate::math;

/// Largest supported rule order.
pub const MAX_GH_ORDER: usize = 64;

/// Gauss–Hermite rule for the weight `e^{−x²}` (physicists' convention).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights from the eigen-decomposition of the Jacobi matrix
/// (Golub–Welsch). Orders are clamped to `1..=64`.
pub fn gauss_hermite(d: usize) -> GaussHermite {
    let d = d.clamp(1, MAX_GH_ORDER);
    let off: Vec<f64> = (1..d).map(|k| math::sqrt(k as f64 / 2.0)).collect();
    let eig = tridiagonal_eigen(&vec![0.0; d], &off).expect("Jacobi matrices are well conditioned");
    let mut nodes = eig.values.clone();
    let mut weights: Vec<f64> = (0..d).map(|k| math::SQRT_PI * eig.vectors[(0, k)] * eig.vectors[(0, k)]).collect();
    // exact symmetry about zero
    for k in 0..d / 2 {
        let j = d - 1 - k;
        let r = 0.5 * (nodes[j] - nodes[k]);
        let w = 0.5 * (weights[j] + weights[k]);
        nodes[k] = -r;
        nodes[j] = r;
        weights[k] = w;
        weights[j] = w;
    }
    if d % 2 == 1 {
        nodes[d / 2] = 0.0;
    }
    GaussHermite { nodes, weights }
}

impl GaussHermite {
    /// `E[f(X)]` for `X ~ N(mean, var)`.
    pub fn expect(&self, mean: f64, var: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let scale = math::sqrt(2.0 * var.max(0.0));
        let mut total = 0.0;
        for (r, w) in self.nodes.iter().zip(&self.weights) {
            total += w * f(mean + scale * r);
        }
        total / math::SQRT_PI
    }
}
