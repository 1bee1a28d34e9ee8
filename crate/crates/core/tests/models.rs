use approx::assert_abs_diff_eq;
use nalgebra::{dmatrix, dvector, DMatrix, DVector, Matrix3};
use nano_filter::gauss::{fd_hessian, fd_jacobian};
use nano_filter::models::{
    make_system, oscillator_dynamics, simulate, simulate_benchmark, NoiseCase, NoiseModel,
    SatelliteAttitude, SystemName, ROBOT_LANDMARKS,
};
use nano_filter::Gaussian;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn point(name: SystemName, vals: &[f64]) -> DVector<f64> {
    let n = make_system(name, name.noise_cases()[0]).unwrap().system.state_dim();
    let scale = match name {
        SystemName::SatelliteAttitude => 1.2,
        SystemName::RobotLocalization => 5.0,
        _ => 3.0,
    };
    DVector::from_iterator(n, vals.iter().take(n).map(|v| v * scale))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_derivatives_match_finite_differences(
        which in 0usize..5,
        vals in prop::collection::vec(-1.0..1.0f64, 3),
        t in 0usize..50,
    ) {
        let name = SystemName::ALL[which];
        let bench = make_system(name, name.noise_cases()[0]).unwrap();
        let sys = &bench.system;
        let dynamics = sys.dynamics();
        let x = point(name, &vals);
        let u = (bench.input)(t);
        if let Some(jac) = dynamics.transition_jacobian(&x, &u, t) {
            let fd = fd_jacobian(|z| sys.f(z, &u, t), &x, None).unwrap();
            prop_assert!((jac.unwrap() - fd).amax() < 1e-6, "{} transition", name);
        }
        if let Some(jac) = dynamics.measurement_jacobian(&x) {
            let fd = fd_jacobian(|z| sys.g(z), &x, None).unwrap();
            prop_assert!((jac.unwrap() - fd).amax() < 1e-6, "{} measurement", name);
        }
        if let Some(hessians) = dynamics.measurement_hessians(&x) {
            for (j, h) in hessians.unwrap().iter().enumerate() {
                let fd = fd_hessian(|z| Ok(sys.g(z)?[j]), &x, None).unwrap();
                prop_assert!((h - fd).amax() < 1e-4, "{} hessian {}", name, j);
            }
        }
    }

    #[test]
    fn satellite_rotation_is_orthonormal(a in -1.5..1.5f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        let rot = SatelliteAttitude::rotation(&dvector![a, b, c]);
        prop_assert!((rot.transpose() * rot - Matrix3::identity()).amax() < 1e-12);
        prop_assert!((rot.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn robot_measurements_preserve_landmark_distances(
        px in -10.0..10.0f64,
        py in -10.0..10.0f64,
        phi in -3.2..3.2f64,
    ) {
        let bench = make_system(SystemName::RobotLocalization, NoiseCase::GaussA).unwrap();
        let y = bench.system.g(&dvector![px, py, phi]).unwrap();
        for (i, m) in ROBOT_LANDMARKS.iter().enumerate() {
            let body = (y[2 * i].powi(2) + y[2 * i + 1].powi(2)).sqrt();
            let world = ((px - m[0]).powi(2) + (py - m[1]).powi(2)).sqrt();
            prop_assert!((body - world).abs() < 1e-10);
        }
    }

    #[test]
    fn measure_into_agrees_with_measure(which in 0usize..5, vals in prop::collection::vec(-1.0..1.0f64, 3)) {
        let name = SystemName::ALL[which];
        let bench = make_system(name, name.noise_cases()[0]).unwrap();
        let x = point(name, &vals);
        let mut out = DVector::zeros(bench.system.measurement_dim());
        bench.system.g_into(&x, &mut out).unwrap();
        prop_assert_eq!(out, bench.system.g(&x).unwrap());
    }
}

#[test]
fn oscillator_transition_matches_series_exponential() {
    let dynamics = oscillator_dynamics();
    let generator = dmatrix![-0.01, 0.2; -0.2, -0.01];
    let mut term = DMatrix::identity(2, 2);
    let mut series = DMatrix::identity(2, 2);
    for k in 1..=20 {
        term = &term * &generator / k as f64;
        series += &term;
    }
    assert!((&dynamics.transition - &series).amax() < 1e-12);
    assert_abs_diff_eq!(dynamics.transition[(0, 0)], 0.97031, epsilon = 1e-5);
    assert_abs_diff_eq!(dynamics.transition[(0, 1)], 0.19669, epsilon = 1e-5);
}

#[test]
fn zero_noise_oscillator_step() {
    let bench = make_system(SystemName::Oscillator, NoiseCase::GaussA).unwrap();
    let tiny = DMatrix::identity(2, 2) * 1e-30;
    let quiet = NoiseModel::gaussian(tiny.clone()).unwrap();
    let x0 = Gaussian::new(dvector![2.5, -5.0], tiny).unwrap();
    let traj = simulate(&bench.system, &quiet, &quiet, &x0, &bench.input, 1, 7).unwrap();
    assert_eq!(traj.states.len(), 2);
    assert_eq!(traj.measurements.len(), 1);
    assert_eq!(traj.inputs.len(), 1);
    let exact = &oscillator_dynamics().transition * dvector![2.5, -5.0];
    assert!((&traj.states[1] - &exact).amax() < 1e-12);
    assert_abs_diff_eq!(traj.states[1][0], 1.44233, epsilon = 1e-4);
    assert_abs_diff_eq!(traj.states[1][1], -5.34329, epsilon = 1e-4);
}

#[test]
fn simulation_is_seed_deterministic() {
    for name in SystemName::ALL {
        for &case in name.noise_cases() {
            let bench = make_system(name, case).unwrap();
            let a = simulate_benchmark(&bench, 50, 3).unwrap();
            let b = simulate_benchmark(&bench, 50, 3).unwrap();
            let c = simulate_benchmark(&bench, 50, 4).unwrap();
            assert_eq!(a, b);
            assert_ne!(a.states, c.states);
        }
    }
}

#[test]
fn growth_examples() {
    let bench = make_system(SystemName::Growth, NoiseCase::GaussA).unwrap();
    let y = bench.system.g(&dvector![1.0, 2.0, 3.0]).unwrap();
    assert!((y - dvector![0.25, 0.65, 0.5]).amax() < 1e-14);
    let x = bench.system.f(&DVector::zeros(3), &DVector::zeros(0), 0).unwrap();
    assert!((x - dvector![8.0, 8.0, 8.0]).amax() < 1e-14);
}

/// Sample mean and covariance of `draws` samples.
fn sample_moments(model: &NoiseModel, draws: usize, seed: u64) -> (DVector<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.dim();
    let mut sum = DVector::zeros(n);
    let mut outer = DMatrix::zeros(n, n);
    for _ in 0..draws {
        let x = model.sample(&mut rng);
        outer += &x * x.transpose();
        sum += x;
    }
    let mean = sum / draws as f64;
    let cov = outer / draws as f64 - &mean * mean.transpose();
    (mean, cov)
}

#[test]
fn benchmark_noise_samples_match_analytic_moments() {
    for name in SystemName::ALL {
        for &case in name.noise_cases() {
            let bench = make_system(name, case).unwrap();
            for model in [&bench.process_noise, &bench.measurement_noise] {
                let (mean, cov) = sample_moments(model, 200_000, 11);
                let want_cov = model.covariance();
                let scale = want_cov.amax();
                assert!(
                    (mean - model.mean()).amax() < 0.02 * scale.sqrt(),
                    "{name} {case} mean"
                );
                assert!((cov - &want_cov).amax() < 0.05 * scale, "{name} {case} covariance");
            }
        }
    }
}

#[test]
fn noise_model_examples() {
    let g = NoiseModel::gaussian(DMatrix::identity(2, 2) * 0.5).unwrap();
    assert_eq!(g.covariance(), DMatrix::identity(2, 2) * 0.5);
    assert_eq!(g.mean(), DVector::zeros(2));
    let beta = NoiseModel::beta_replicated(2.0, 2.0, 3).unwrap();
    assert!((beta.mean() - DVector::from_element(3, 0.5)).amax() < 1e-15);
    assert!((beta.covariance() - DMatrix::from_element(3, 3, 0.05)).amax() < 1e-15);
    let mixture = NoiseModel::mixture(vec![
        (0.9, NoiseModel::laplace(DMatrix::identity(2, 2) * 1e-5).unwrap()),
        (0.1, NoiseModel::laplace(DMatrix::identity(2, 2) * 1e-2).unwrap()),
    ])
    .unwrap();
    let want = DMatrix::identity(2, 2) * (0.9e-5 + 0.1e-2);
    assert!((mixture.covariance() - want).amax() < 1e-15);
}
