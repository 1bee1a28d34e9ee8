use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use nano_filter::unscented::{expectation, mc_expectation, sigma_points, GaussianQuadrature};
use nano_filter::{unscented_transform, Gaussian, GaussHermite, Lambda, SigmaPointRule};
use proptest::prelude::*;

fn gaussian_from(n: usize, mean: &[f64], factor: &[f64]) -> Gaussian {
    let a = DMatrix::from_column_slice(n, n, &factor[..n * n]);
    let cov = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
    Gaussian::new(DVector::from_column_slice(&mean[..n]), cov).unwrap()
}

fn rule_strategy() -> impl Strategy<Value = SigmaPointRule> {
    prop_oneof![
        Just(SigmaPointRule::julier()),
        Just(SigmaPointRule::van_der_merwe()),
        (0.0..1.0f64, 0.0..3.0f64).prop_map(|(a, b)| SigmaPointRule::new(a, b, Lambda::ThreeMinusDim)),
        (0.0..1.0f64, 0.0..3.0f64, 0.0..4.0f64)
            .prop_map(|(a, b, l)| SigmaPointRule::new(a, b, Lambda::Fixed(l))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn affine_maps_are_exact(
        n in 1usize..=5,
        m in 1usize..=5,
        rule in rule_strategy(),
        mean in prop::collection::vec(-3.0..3.0f64, 5),
        factor in prop::collection::vec(-1.5..1.5f64, 25),
        map in prop::collection::vec(-2.0..2.0f64, 25),
        offset in prop::collection::vec(-2.0..2.0f64, 5),
    ) {
        let g = gaussian_from(n, &mean, &factor);
        let a = DMatrix::from_column_slice(m, n, &map[..m * n]);
        let b = DVector::from_column_slice(&offset[..m]);
        let (mu, cov) = unscented_transform(&g, |x| Ok(&a * x + &b), &rule).unwrap();
        let want_mu = &a * g.mean() + &b;
        let want_cov = &a * g.cov() * a.transpose();
        prop_assert!((mu - want_mu).amax() <= 1e-10);
        prop_assert!((cov - want_cov).amax() <= 1e-10);
    }

    #[test]
    fn mean_weights_sum_to_one(n in 1usize..=8, rule in rule_strategy()) {
        let (wm, wc) = rule.weights(n).unwrap();
        prop_assert_eq!(wm.len(), 2 * n + 1);
        prop_assert_eq!(wc.len(), 2 * n + 1);
        prop_assert!((wm.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn second_moments_are_reproduced(
        n in 1usize..=5,
        rule in rule_strategy(),
        mean in prop::collection::vec(-3.0..3.0f64, 5),
        factor in prop::collection::vec(-1.5..1.5f64, 25),
    ) {
        let g = gaussian_from(n, &mean, &factor);
        let mu = g.mean().clone();
        let second: DMatrix<f64> =
            expectation(&g, |z| Ok((z - &mu) * (z - &mu).transpose()), &rule).unwrap();
        prop_assert!((second - g.cov()).amax() <= 1e-10);
    }

    #[test]
    fn scalar_fourth_moment_is_spread_times_variance_squared(
        mean in -5.0..5.0f64,
        var in 0.01..4.0f64,
        lambda in -0.9..5.0f64,
    ) {
        let g = Gaussian::scalar(mean, var).unwrap();
        let rule = SigmaPointRule::new(1.0, 0.0, Lambda::Fixed(lambda));
        let fourth: f64 = expectation(&g, |z| Ok((z[0] - mean).powi(4)), &rule).unwrap();
        let want = var * var * (1.0 + lambda);
        prop_assert!((fourth - want).abs() <= 1e-10 * want.max(1.0));
    }

    #[test]
    fn gauss_hermite_integrates_low_degree_polynomials(
        n in 1usize..=3,
        p in 2usize..=5,
        mean in prop::collection::vec(-2.0..2.0f64, 3),
        factor in prop::collection::vec(-1.0..1.0f64, 9),
    ) {
        let g = gaussian_from(n, &mean, &factor);
        let rule = GaussHermite::new(p).unwrap();
        let mu = g.mean().clone();
        let second: DMatrix<f64> = nano_filter::unscented::integrate(
            &g,
            |z| Ok((z - &mu) * (z - &mu).transpose()),
            &rule,
        )
        .unwrap();
        prop_assert!((second - g.cov()).amax() <= 1e-10);
        let first: DVector<f64> = nano_filter::unscented::integrate(&g, |z| Ok(z.clone()), &rule).unwrap();
        prop_assert!((first - &mu).amax() <= 1e-10);
    }
}

#[test]
fn scalar_fourth_moment_examples() {
    let g = Gaussian::scalar(1.0, 2.0).unwrap();
    let fourth = |lambda: f64| -> f64 {
        let rule = SigmaPointRule::new(1.0, 0.0, Lambda::Fixed(lambda));
        expectation(&g, |z| Ok((z[0] - 1.0).powi(4)), &rule).unwrap()
    };
    assert_abs_diff_eq!(fourth(2.0), 3.0 * 4.0, epsilon = 1e-10);
    assert_abs_diff_eq!(fourth(0.0), 4.0, epsilon = 1e-10);
}

#[test]
fn sigma_points_are_symmetric_about_the_mean() {
    let g = gaussian_from(3, &[1.0, -2.0, 0.5], &[1.0, 0.2, 0.0, 0.3, 1.0, 0.1, 0.0, 0.4, 1.0]);
    let set = sigma_points(&g, &SigmaPointRule::van_der_merwe()).unwrap();
    assert_eq!(set.len(), 7);
    for i in 1..=3 {
        let mid = (&set.points[i] + &set.points[i + 3]) * 0.5;
        assert!((mid - g.mean()).amax() < 1e-14);
    }
}

#[test]
fn monte_carlo_error_shrinks_with_sample_count() {
    let g = Gaussian::scalar(0.0, 1.0).unwrap();
    let mean_error = |n: usize| -> f64 {
        (0..10u64)
            .map(|seed| {
                let m: f64 = mc_expectation(&g, |z| Ok(z[0] * z[0]), n, seed).unwrap();
                (m - 1.0).abs()
            })
            .sum::<f64>()
            / 10.0
    };
    let small = mean_error(1_000);
    let large = mean_error(100_000);
    let se_small = (2.0 / 1_000f64).sqrt();
    let se_large = (2.0 / 100_000f64).sqrt();
    assert!(small < 4.0 * se_small, "{small}");
    assert!(large < 4.0 * se_large, "{large}");
    assert!(large < small / 3.0, "{small} {large}");
}

#[test]
fn quadrature_visit_reports_every_node_once() {
    let g = gaussian_from(2, &[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]);
    let mut count = 0;
    let mut total = 0.0;
    GaussHermite::new(3)
        .unwrap()
        .visit(&g, &mut |w, _| {
            count += 1;
            total += w;
            Ok(())
        })
        .unwrap();
    assert_eq!(count, 9);
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-14);
}
