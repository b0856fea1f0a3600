mod common;

use common::{inverse, matmul, solve, to_dense, transpose, Dense};
use denseinla_core::linalg::Matrix;
use denseinla_core::model::{ComponentKind, HyperPriorSpec, LatentComponent, LatentModel, Likelihood, Precision};
use denseinla_core::stage2::{
    design_points, gauss_hermite, gaussian_approx, mixture_weights, vb_correct_mean, vb_expectations, GaOptions,
    Strategy, VbOptions,
};
use proptest::prelude::*;

const LOG_TAU_Y: f64 = 1.2;

fn design() -> Matrix {
    let mut a = Matrix::zeros(9, 5);
    for r in 0..9 {
        a[(r, 0)] = 1.0;
        a[(r, 1 + r % 4)] = 1.0;
        if r % 3 == 0 {
            a[(r, 1 + (r + 1) % 4)] = 0.5;
        }
    }
    a
}

fn y_gauss() -> Vec<f64> {
    vec![0.3, 1.1, -0.4, 2.0, 0.9, -1.2, 0.0, 0.7, 1.5]
}

/// Intercept plus a 4-node effect, all precisions fixed (no hyperparameters).
fn fixed_model(kind: ComponentKind, likelihood: Likelihood) -> LatentModel {
    let components = vec![
        LatentComponent::new("mu", ComponentKind::Intercept, Precision::Fixed(-1.0)).unwrap(),
        LatentComponent::new("u", kind, Precision::Fixed(0.4)).unwrap(),
    ];
    LatentModel::new(components, design(), likelihood, Vec::new()).unwrap()
}

fn gauss_lik() -> Likelihood {
    Likelihood::Gaussian { precision: Precision::Fixed(LOG_TAU_Y) }
}

fn dense_q(m: &LatentModel) -> Dense {
    to_dense(m.assemble_prior_precision(&[]).unwrap().as_matrix())
}

fn q_star(m: &LatentModel, w: &[f64]) -> Dense {
    let a = to_dense(m.design());
    let mut q = dense_q(m);
    let ata = matmul(&transpose(&a), &a.iter().zip(w).map(|(r, wi)| r.iter().map(|v| v * wi).collect()).collect());
    for i in 0..q.len() {
        for j in 0..q.len() {
            q[i][j] += ata[i][j];
        }
    }
    q
}

#[test]
fn gaussian_conjugate_full_rank() {
    let m = fixed_model(ComponentKind::Iid(4), gauss_lik());
    let y = y_gauss();
    let tau = LOG_TAU_Y.exp();
    let post = gaussian_approx(&m, &y, &[], &GaOptions::default(), true).unwrap();
    assert_eq!(post.iterations, 1);
    let qs = q_star(&m, &vec![tau; 9]);
    let b: Vec<f64> = m.design().t_matvec(&y).unwrap().iter().map(|v| v * tau).collect();
    let mean = solve(&qs, &b);
    let cov = inverse(&qs);
    for i in 0..5 {
        assert!((post.mean[i] - mean[i]).abs() < 1e-10);
        assert!((post.cov.as_ref().unwrap().as_matrix()[(i, i)] - cov[i][i]).abs() < 1e-10);
    }
    // the Laplace density is exact here: ln N(y; 0, A Q⁻¹ Aᵀ + I/τ)
    let a = to_dense(m.design());
    let mut marg = matmul(&matmul(&a, &inverse(&dense_q(&m))), &transpose(&a));
    for (i, row) in marg.iter_mut().enumerate() {
        row[i] += 1.0 / tau;
    }
    let quad: f64 = y.iter().zip(solve(&marg, &y)).map(|(a, b)| a * b).sum();
    let exact = -0.5 * (9.0 * (2.0 * std::f64::consts::PI).ln() + common::log_det(&marg) + quad);
    assert!((post.log_density - exact).abs() < 1e-9, "{} vs {exact}", post.log_density);
}

/// KKT system `[[Q*, N], [Nᵀ, 0]]` conditions on `Nᵀ x = 0` directly.
fn kkt(qs: &Dense, null: &Matrix) -> Dense {
    let (s, k) = (qs.len(), null.cols());
    let mut out = vec![vec![0.0; s + k]; s + k];
    for i in 0..s {
        out[i][..s].copy_from_slice(&qs[i]);
        for c in 0..k {
            out[i][s + c] = null[(i, c)];
            out[s + c][i] = null[(i, c)];
        }
    }
    out
}

#[test]
fn gaussian_conjugate_rank_deficient_matches_constrained_oracle() {
    let m = fixed_model(ComponentKind::Rw2(4), gauss_lik());
    let y = y_gauss();
    let tau = LOG_TAU_Y.exp();
    let post = gaussian_approx(&m, &y, &[], &GaOptions::default(), true).unwrap();
    assert!(post.constrained);
    assert_eq!(post.iterations, 1);
    let null = m.null_basis();
    assert_eq!(null.cols(), 2);
    let big = kkt(&q_star(&m, &vec![tau; 9]), &null);
    let mut rhs: Vec<f64> = m.design().t_matvec(&y).unwrap().iter().map(|v| v * tau).collect();
    rhs.extend([0.0, 0.0]);
    let sol = solve(&big, &rhs);
    let inv = inverse(&big);
    let cov = post.cov.unwrap();
    for i in 0..5 {
        assert!((post.mean[i] - sol[i]).abs() < 1e-9);
        for j in 0..5 {
            assert!((cov.as_matrix()[(i, j)] - inv[i][j]).abs() < 1e-9);
        }
    }
    let resid = null.transpose().matvec(&post.mean).unwrap();
    assert!(resid.iter().all(|r| r.abs() < 1e-10));
}

fn counts() -> Vec<f64> {
    vec![0.0, 3.0, 1.0, 7.0, 2.0, 0.0, 4.0, 1.0, 5.0]
}

#[test]
fn poisson_mode_is_stationary() {
    let m = fixed_model(ComponentKind::Rw1(4), Likelihood::Poisson { offsets: vec![1.0; 9] });
    let y = counts();
    let post = gaussian_approx(&m, &y, &[], &GaOptions { tol: 1e-12, max_iter: 100 }, false).unwrap();
    assert!(post.iterations > 1);
    // Aᵀ(y − e^η) − Q x lies in the null space of the prior
    let eta = m.linear_predictor(&post.mean).unwrap();
    let g: Vec<f64> = y.iter().zip(&eta).map(|(yi, e)| yi - e.exp()).collect();
    let mut grad = m.design().t_matvec(&g).unwrap();
    for (gi, qi) in grad.iter_mut().zip(m.prior_matvec(&[], &post.mean).unwrap()) {
        *gi -= qi;
    }
    let null = m.null_basis();
    let proj = null.matvec(&null.t_matvec(&grad).unwrap()).unwrap();
    for (gi, pi) in grad.iter().zip(&proj) {
        assert!((gi - pi).abs() < 1e-8);
    }
    assert!(null.t_matvec(&post.mean).unwrap().iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn vb_leaves_gaussian_mean_unchanged() {
    let m = fixed_model(ComponentKind::Rw1(4), gauss_lik());
    let y = y_gauss();
    let post = gaussian_approx(&m, &y, &[], &GaOptions::default(), true).unwrap();
    let vb = vb_correct_mean(&m, &y, &post, &VbOptions::default()).unwrap();
    for (a, b) in vb.mean.iter().zip(&post.mean) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn vb_moves_poisson_mean_and_decreases_objective() {
    let m = fixed_model(ComponentKind::Rw1(4), Likelihood::Poisson { offsets: vec![1.0; 9] });
    let y = counts();
    let post = gaussian_approx(&m, &y, &[], &GaOptions::default(), true).unwrap();
    let vb = vb_correct_mean(&m, &y, &post, &VbOptions::default()).unwrap();
    assert!(vb.first_step > 1e-4);
    assert!(vb.objective_trace.windows(2).all(|w| w[1] <= w[0]));
    // E[e^η] grows with the variance, so the corrected means shrink
    let before: f64 = m.linear_predictor(&post.mean).unwrap().iter().sum();
    let after: f64 = m.linear_predictor(&vb.mean).unwrap().iter().sum();
    assert!(after < before);
    let null = m.null_basis();
    assert!(null.t_matvec(&vb.mean).unwrap().iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn plan_second_moments_are_exact() {
    for t in 1..=8 {
        let strategies: &[Strategy] = if t <= 2 { &[Strategy::Grid, Strategy::Ccd] } else { &[Strategy::Ccd] };
        for &st in strategies {
            let pts = design_points(st, t).unwrap();
            let total: f64 = pts.iter().map(|p| p.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for i in 0..t {
                let first: f64 = pts.iter().map(|p| p.weight * p.z[i]).sum();
                assert!(first.abs() < 1e-12);
                for j in 0..t {
                    let second: f64 = pts.iter().map(|p| p.weight * p.z[i] * p.z[j]).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((second - target).abs() < 1e-10, "t={t} {st:?} ({i},{j}) {second}");
                }
            }
        }
    }
    assert_eq!(design_points(Strategy::Ccd, 6).unwrap().len(), 45);
    assert_eq!(design_points(Strategy::EmpiricalBayes, 4).unwrap().len(), 1);
}

#[test]
fn mixture_weights_divide_out_the_standard_normal() {
    // a log density that is exactly standard normal gets the design weights back
    let pts = design_points(Strategy::Ccd, 3).unwrap();
    let zs: Vec<Vec<f64>> = pts.iter().map(|p| p.z.clone()).collect();
    let dw: Vec<f64> = pts.iter().map(|p| p.weight).collect();
    let ld: Vec<f64> = zs.iter().map(|z| 4.0 - 0.5 * z.iter().map(|v| v * v).sum::<f64>()).collect();
    let w = mixture_weights(&dw, &ld, &zs).unwrap();
    for (a, b) in w.iter().zip(&dw) {
        assert!((a - b).abs() < 1e-12);
    }
}

fn single_obs_model(y_count: bool, offset: f64) -> LatentModel {
    let c = vec![LatentComponent::new("u", ComponentKind::Iid(1), Precision::Fixed(0.0)).unwrap()];
    let lik = if y_count {
        Likelihood::Poisson { offsets: vec![offset] }
    } else {
        Likelihood::Gaussian { precision: Precision::Hyper(0) }
    };
    let priors = if y_count { Vec::new() } else { vec![HyperPriorSpec::Gaussian { mean: 0.0, prec: 1.0 }] };
    LatentModel::new(c, Matrix::identity(1), lik, priors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vb_expectations_match_lognormal_closed_form(
        nu in -2.0..2.0f64, sigma2 in 0.01..0.5f64, y in 0u32..12, phi in 0.5..3.0f64,
    ) {
        let m = single_obs_model(true, phi);
        let rule = gauss_hermite(VbOptions::default().order);
        let e = vb_expectations(&m, &[y as f64], &[], &[nu], &[sigma2], &rule).unwrap()[0];
        // E[φ e^η] = φ e^{ν + σ²/2}
        let mean_mu = phi * (nu + 0.5 * sigma2).exp();
        let ln_fact: f64 = (1..=y).map(|k| (k as f64).ln()).sum();
        let value = -(y as f64 * (phi.ln() + nu) - mean_mu - ln_fact);
        prop_assert!((e.value - value).abs() < 1e-5 * (1.0 + value.abs()));
        prop_assert!((e.d1 - (mean_mu - y as f64)).abs() < 1e-5 * (1.0 + mean_mu));
        prop_assert!((e.d2 - mean_mu).abs() < 1e-5 * (1.0 + mean_mu));
    }

    #[test]
    fn vb_derivatives_match_finite_differences(
        nu in -2.0..2.0f64, sigma2 in 0.01..1.0f64, y in -3.0..3.0f64, log_tau in -1.0..1.0f64,
    ) {
        let m = single_obs_model(false, 1.0);
        let rule = gauss_hermite(VbOptions::default().order);
        let at = |d: f64| vb_expectations(&m, &[y], &[log_tau], &[nu + d], &[sigma2], &rule).unwrap()[0];
        let h = 1e-4;
        let (p, c, n) = (at(h), at(0.0), at(-h));
        prop_assert!(((p.value - n.value) / (2.0 * h) - c.d1).abs() < 1e-5 * (1.0 + c.d1.abs()));
        prop_assert!(((p.d1 - n.d1) / (2.0 * h) - c.d2).abs() < 1e-5 * (1.0 + c.d2));
    }
}
