use denseinla_core::constraints::{
    compare_paths, kriging_correct, kriging_marginal_variances, kriging_mean, Axis, ConstraintSet, InteractionPlan,
};
use denseinla_core::linalg::{direct_posterior_cov, pseudo_inverse, woodbury_posterior_cov, DenseSymmetric, Matrix, DEFAULT_PINV_TOL};
use denseinla_core::model::{LatentComponent, Precision};
use proptest::prelude::*;

const PRINTED_PINV: [[f64; 4]; 4] = [
    [0.875, 0.125, -0.375, -0.625],
    [0.125, 0.375, -0.125, -0.375],
    [-0.375, -0.125, 0.375, 0.125],
    [-0.625, -0.375, 0.125, 0.875],
];
const PRINTED_UNCONSTRAINED: [[f64; 4]; 4] = [
    [0.350, -0.150, -0.293, -0.320],
    [-0.150, 0.350, 0.207, 0.180],
    [-0.293, 0.207, 0.554, 0.430],
    [-0.320, 0.180, 0.430, 0.905],
];
const PRINTED_POSTERIOR: [[f64; 4]; 4] = [
    [0.274, -0.044, -0.129, -0.102],
    [-0.044, 0.198, -0.025, -0.129],
    [-0.129, -0.025, 0.198, -0.044],
    [-0.102, -0.129, -0.044, 0.274],
];

fn sym(rows: &[[f64; 4]; 4]) -> DenseSymmetric {
    DenseSymmetric::new(4, rows.iter().flatten().copied().collect()).unwrap()
}

fn worst(a: &DenseSymmetric, printed: &[[f64; 4]; 4]) -> f64 {
    a.max_abs_diff(&sym(printed))
}

fn rw1_4() -> DenseSymmetric {
    DenseSymmetric::new(4, vec![1., -1., 0., 0., -1., 2., -1., 0., 0., -1., 2., -1., 0., 0., -1., 1.]).unwrap()
}

fn worked_q_like() -> DenseSymmetric {
    let a = Matrix::from_rows(&[&[1.0, 1.0, 0.0, 0.0], &[1.0, 0.0, 1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]]).unwrap();
    a.weighted_gram(&[1.796, 2.033, 0.896]).unwrap()
}

#[test]
fn worked_example_pinv_and_woodbury() {
    let p = pseudo_inverse(&rw1_4(), DEFAULT_PINV_TOL).unwrap();
    assert!(worst(&p.pinv, &PRINTED_PINV) < 1e-3);
    let post = woodbury_posterior_cov(&p.pinv, &worked_q_like()).unwrap();
    assert!(worst(&post, &PRINTED_POSTERIOR) < 1e-3);
    // the constraint 1ᵀx = 0 holds exactly on the Woodbury covariance
    let ones = ConstraintSet::new(Matrix::from_rows(&[&[1.0; 4]]).unwrap()).unwrap();
    for j in 0..4 {
        assert!(ones.residual(&post.as_matrix().column(j)).unwrap() < 1e-12);
    }
}

#[test]
fn worked_example_kriging() {
    let ones = ConstraintSet::new(Matrix::from_rows(&[&[1.0; 4]]).unwrap()).unwrap();
    let unconstrained = direct_posterior_cov(&rw1_4().add_diagonal(1e-4), &worked_q_like()).unwrap();
    assert!(worst(&unconstrained, &PRINTED_UNCONSTRAINED) < 1e-3);
    let corrected = kriging_correct(&unconstrained, &ones).unwrap();
    assert!(worst(&corrected, &PRINTED_POSTERIOR) < 1e-3);
    // the 3-decimal rounding of the input is amplified by (C Σ Cᵀ)⁻¹
    let from_rounded = kriging_correct(&sym(&PRINTED_UNCONSTRAINED), &ones).unwrap();
    assert!(worst(&from_rounded, &PRINTED_POSTERIOR) < 2e-3);
    let cmp = compare_paths(&rw1_4(), &worked_q_like(), 1e-4).unwrap();
    assert_eq!(cmp.k, 1);
    assert!(cmp.max_gap < 1e-4);
}

#[test]
fn full_rank_prior_paths_coincide() {
    let prior = rw1_4().add_diagonal(0.3);
    let cmp = compare_paths(&prior, &worked_q_like(), 1e-4).unwrap();
    assert_eq!((cmp.k, cmp.jitter), (0, 0.0));
    assert!(cmp.max_gap < 1e-10);
}

#[test]
fn jitter_gap_shrinks_with_jitter() {
    let gaps: Vec<f64> =
        [1e-2, 1e-3, 1e-4].iter().map(|e| compare_paths(&rw1_4(), &worked_q_like(), *e).unwrap().max_gap).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
    // first order in ε
    assert!((gaps[0] / gaps[1] - 10.0).abs() < 1.0);
}

#[test]
fn kriging_correction_cost_is_quadratic_in_k() {
    let s = 40;
    let cov = DenseSymmetric::identity(s);
    let ops = |k: usize| {
        let mut c = Matrix::zeros(k, s);
        for i in 0..k {
            c[(i, i)] = 1.0;
        }
        kriging_marginal_variances(&cov, &ConstraintSet::new(c).unwrap()).unwrap().1
    };
    let (a, b) = (ops(5), ops(10));
    // projection is s²k (linear in k), the correction ≈ 3/2 s k²
    assert_eq!(b.projection, 2 * a.projection);
    let ratio = b.correction as f64 / a.correction as f64;
    assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
}

fn brute_force_deficiency(plan: &InteractionPlan) -> usize {
    plan.components(None)
        .into_iter()
        .map(|(name, kind)| LatentComponent::new(name, kind, Precision::Hyper(0)).unwrap().rank_deficiency)
        .sum()
}

#[test]
fn published_counts() {
    for (ns, s, k) in [(200, 1207, 406), (400, 2407, 806), (800, 4807, 1606)] {
        let p = InteractionPlan::time_space(5, ns);
        assert_eq!((p.latent_dimension(), p.count_constraints()), (s, k));
    }
    assert_eq!(InteractionPlan::full(Axis::new(25, 1), Axis::new(9, 1), 50).count_constraints(), 2010);
}

fn plan_strategy() -> impl Strategy<Value = InteractionPlan> {
    (
        prop::option::of((2usize..6, 1usize..=2)),
        prop::option::of((2usize..5, 1usize..=2)),
        prop::option::of(2usize..6),
        any::<[bool; 4]>(),
    )
        .prop_map(|(t, a, s, f)| InteractionPlan {
            time: t.map(|(n, o)| Axis::new(n, o)),
            age: a.map(|(n, o)| Axis::new(n, o)),
            space: s,
            time_age: f[0],
            time_space: f[1],
            space_age: f[2],
            three_way: f[3],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counts_match_eigen_deficiency(plan in plan_strategy()) {
        prop_assert_eq!(plan.count_constraints(), brute_force_deficiency(&plan));
        let s: usize = plan.components(None).iter().map(|(_, k)| k.size()).sum();
        prop_assert_eq!(plan.latent_dimension(), s);
    }

    #[test]
    fn kriging_output_satisfies_constraints(
        n in 3usize..7, k in 1usize..3, e in prop::collection::vec(-1.0..1.0f64, 49), c in prop::collection::vec(-1.0..1.0f64, 14),
        mu in prop::collection::vec(-2.0..2.0f64, 7),
    ) {
        let b = Matrix::from_row_major(n, n, e[..n * n].to_vec()).unwrap();
        let cov = b.matmul(&b.transpose()).unwrap().symmetrized().add_diagonal(0.5);
        let cm = Matrix::from_row_major(k, n, c[..k * n].to_vec()).unwrap();
        let Ok(set) = ConstraintSet::new(cm.clone()) else { return Ok(()) };
        let fixed = kriging_correct(&cov, &set).unwrap();
        let cs = cm.matmul(fixed.as_matrix()).unwrap();
        prop_assert!(cs.max_abs() < 1e-9 * (1.0 + cov.as_matrix().max_abs()));
        let m = kriging_mean(&mu[..n], &cov, &set).unwrap();
        prop_assert!(cm.matvec(&m).unwrap().iter().all(|v| v.abs() < 1e-9));
        let (var, _) = kriging_marginal_variances(&cov, &set).unwrap();
        for (i, v) in var.iter().enumerate() {
            prop_assert!((v - fixed.as_matrix()[(i, i)]).abs() < 1e-10);
        }
    }
}
