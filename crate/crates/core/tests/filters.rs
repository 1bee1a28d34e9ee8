use std::sync::Arc;

use nalgebra::{dvector, DMatrix, DVector};
use nano_filter::baseline::{ekf_update, iekf_update, plf_update, ukf_update};
use nano_filter::models::{
    make_system, simulate, simulate_benchmark, DynamicalSystem, FnDynamics, Linear, NoiseCase,
    NoiseModel, SystemName,
};
use nano_filter::nano::InitStrategy;
use nano_filter::{FilterKind, Gaussian, NanoConfig, SigmaPointRule, UpdateIntegrator};
use proptest::prelude::*;

/// Textbook Kalman filter in covariance form.
fn kalman_step(
    belief: &Gaussian,
    a: &DMatrix<f64>,
    h: &DMatrix<f64>,
    c: &DVector<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>) {
    let m = a * belief.mean();
    let p = a * belief.cov() * a.transpose() + q;
    let s = h * &p * h.transpose() + r;
    let k = &p * h.transpose() * s.try_inverse().unwrap();
    let mean = &m + &k * (y - h * &m - c);
    let n = m.len();
    let cov = (DMatrix::identity(n, n) - &k * h) * &p;
    (mean, (&cov + cov.transpose()) * 0.5)
}

struct LinearCase {
    sys: DynamicalSystem,
    a: DMatrix<f64>,
    h: DMatrix<f64>,
    c: DVector<f64>,
    x0: Gaussian,
    process: NoiseModel,
    measurement: NoiseModel,
}

fn linear_case(n: usize, m: usize, vals: &[f64]) -> LinearCase {
    let mut it = vals.iter().copied();
    let mut take = |k: usize| -> Vec<f64> { (0..k).map(|_| it.next().unwrap()).collect() };
    let rot = DMatrix::from_column_slice(n, n, &take(n * n));
    let skew = (&rot - rot.transpose()) * 0.3;
    let eye = DMatrix::<f64>::identity(n, n);
    // Cayley transform of a skew matrix is orthogonal, so |eig(a)| = 0.95
    let a = (&eye + &skew) * (&eye - &skew).try_inverse().unwrap() * 0.95;
    let h = DMatrix::from_column_slice(m, n, &take(m * n)).add_scalar(0.5);
    let c = DVector::from_column_slice(&take(m));
    let fq = DMatrix::from_column_slice(n, n, &take(n * n));
    let q = &fq * fq.transpose() * 0.1 + DMatrix::identity(n, n) * 0.01;
    let fr = DMatrix::from_column_slice(m, m, &take(m * m));
    let r = &fr * fr.transpose() * 0.2 + DMatrix::identity(m, m) * 0.05;
    let dynamics = Linear::new(a.clone(), h.clone()).with_offset(c.clone());
    let sys = DynamicalSystem::new("linear", Arc::new(dynamics), q.clone(), r.clone()).unwrap();
    LinearCase {
        sys,
        a,
        h,
        c,
        x0: Gaussian::new(DVector::zeros(n), DMatrix::identity(n, n)).unwrap(),
        process: NoiseModel::gaussian(q).unwrap(),
        measurement: NoiseModel::gaussian(r).unwrap(),
    }
}

fn exact_nano(init: InitStrategy) -> NanoConfig {
    NanoConfig {
        init_strategy: init,
        integrator: UpdateIntegrator::GaussHermite { points_per_dim: 3 },
        ..NanoConfig::default()
    }
}

fn filters() -> Vec<(FilterKind, f64)> {
    vec![
        (FilterKind::from_name("ekf").unwrap(), 1e-8),
        (FilterKind::from_name("ukf").unwrap(), 1e-8),
        (FilterKind::Ukf { rule: SigmaPointRule::julier() }, 1e-8),
        (FilterKind::from_name("iekf").unwrap(), 1e-8),
        (FilterKind::from_name("plf").unwrap(), 1e-8),
        (FilterKind::Nano(exact_nano(InitStrategy::LaplaceEkf)), 1e-6),
        (FilterKind::Nano(exact_nano(InitStrategy::Prior)), 1e-6),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_filter_is_the_kalman_filter_on_linear_systems(
        n in 1usize..=3,
        m in 1usize..=3,
        vals in prop::collection::vec(-1.0..1.0f64, 40),
        seed in 0u64..1000,
    ) {
        let case = linear_case(n, m, &vals);
        let input: nano_filter::models::InputSignal = Arc::new(|_| DVector::zeros(0));
        let traj = simulate(&case.sys, &case.process, &case.measurement, &case.x0, &input, 100, seed)
            .unwrap();
        for (filter, tol) in filters() {
            let mut belief = case.x0.clone();
            let mut kf = case.x0.clone();
            for t in 0..traj.len() {
                let y = &traj.measurements[t];
                let step = filter.step(&belief, &traj.inputs[t], t, y, &case.sys).unwrap();
                let (mean, cov) =
                    kalman_step(&kf, &case.a, &case.h, &case.c, case.sys.q(), case.sys.r(), y);
                prop_assert!(!step.fallback);
                prop_assert!((step.posterior.mean() - &mean).amax() <= tol,
                    "{} step {}: mean {} vs {}", filter, t, step.posterior.mean(), mean);
                prop_assert!((step.posterior.cov() - &cov).amax() <= tol,
                    "{} step {}: cov", filter, t);
                kf = Gaussian::new(mean, cov).unwrap();
                belief = step.posterior;
            }
        }
    }
}

#[test]
fn linear_filters_converge_in_one_relinearization() {
    let case = linear_case(2, 2, &[0.3; 40]);
    let prior = Gaussian::new(dvector![0.5, -0.5], DMatrix::identity(2, 2)).unwrap();
    let y = dvector![1.0, 2.0];
    let (ekf, _) = ekf_update(&prior, &y, &case.sys).unwrap();
    let (iekf, _, iters) = iekf_update(&prior, &y, &case.sys, 10, 1e-10).unwrap();
    assert!(iters <= 2);
    assert!((iekf.mean() - ekf.mean()).amax() < 1e-12);
    let rule = SigmaPointRule::van_der_merwe();
    let (ukf, _) = ukf_update(&prior, &y, &case.sys, &rule).unwrap();
    let (plf, _, iters) = plf_update(&prior, &y, &case.sys, &rule, 10, 1e-10).unwrap();
    assert!(iters <= 2);
    assert!((plf.mean() - ukf.mean()).amax() < 1e-10);
    assert!((plf.cov() - ukf.cov()).amax() < 1e-10);
}

fn scalar_system(
    g: impl Fn(f64) -> f64 + Send + Sync + 'static,
    dg: impl Fn(f64) -> f64 + Send + Sync + 'static,
    r: f64,
) -> DynamicalSystem {
    let dynamics = FnDynamics::new(1, 1, |x, _, _| Ok(x.clone()), move |x| Ok(dvector![g(x[0])]))
        .with_g_jacobian(move |x| Ok(DMatrix::from_element(1, 1, dg(x[0]))));
    DynamicalSystem::new("scalar", Arc::new(dynamics), DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, r))
        .unwrap()
}

/// Grid over `[lo, hi]` of an unnormalized log posterior.
fn grid(lo: f64, hi: f64, points: usize, log_post: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    (0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            (x, log_post(x))
        })
        .collect()
}

#[test]
fn iekf_approaches_the_posterior_mode() {
    let sys = scalar_system(|x| x * x, |x| 2.0 * x, 0.01);
    let prior = Gaussian::scalar(1.0, 0.1).unwrap();
    let y = dvector![1.21];
    let log_post = |x: f64| -(x - 1.0).powi(2) / 0.2 - (1.21 - x * x).powi(2) / 0.02;
    let mode = grid(0.0, 2.0, 200_001, log_post)
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0;
    let mut last = f64::INFINITY;
    for k in 1..=6 {
        let (post, _, _) = iekf_update(&prior, &y, &sys, k, 0.0).unwrap();
        let dist = (post.mean()[0] - mode).abs();
        assert!(dist <= last + 1e-12, "iteration {k}: {dist} > {last}");
        last = dist;
    }
    assert!(last < 1e-4, "{last}");
    let (ekf, _) = ekf_update(&prior, &y, &sys).unwrap();
    let (iekf, _, _) = iekf_update(&prior, &y, &sys, 10, 1e-12).unwrap();
    let misfit = |x: f64| (x * x - 1.21).abs();
    assert!(misfit(iekf.mean()[0]) < misfit(ekf.mean()[0]));
}

/// Scalar posterior linearization with the `λ = 2`, `α = 10⁻³`, `β = 1` three-point rule.
fn scalar_plf(m0: f64, p0: f64, r: f64, y: f64, iters: usize) -> (f64, f64) {
    let wc = [2.0 / 3.0 + 2.0 - 1e-6, 1.0 / 6.0, 1.0 / 6.0];
    let (mut m, mut p) = (m0, p0);
    for _ in 0..iters {
        let s = (3.0 * p).sqrt();
        let xs = [m, m + s, m - s];
        let ws = [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0];
        let ys = xs.map(f64::sin);
        let yb: f64 = ws.iter().zip(&ys).map(|(w, v)| w * v).sum();
        let pxy: f64 = (0..3).map(|i| wc[i] * (xs[i] - m) * (ys[i] - yb)).sum();
        let pyy: f64 = (0..3).map(|i| wc[i] * (ys[i] - yb).powi(2)).sum();
        let a = pxy / p;
        let b = yb - a * m;
        let omega = pyy - a * a * p;
        let k = p0 * a / (a * a * p0 + r + omega);
        m = m0 + k * (y - a * m0 - b);
        p = p0 - k * a * p0;
    }
    (m, p)
}

#[test]
fn plf_matches_scalar_reference_recursion() {
    let sys = scalar_system(f64::sin, f64::cos, 0.1);
    let prior = Gaussian::scalar(0.0, 0.5).unwrap();
    let y = dvector![0.4];
    let rule = SigmaPointRule::van_der_merwe();
    let (plf, _, _) = plf_update(&prior, &y, &sys, &rule, 50, 1e-14).unwrap();
    let (m, p) = scalar_plf(0.0, 0.5, 0.1, 0.4, 50);
    assert!((plf.mean()[0] - m).abs() < 1e-8, "{} vs {m}", plf.mean()[0]);
    assert!((plf.cov()[(0, 0)] - p).abs() < 1e-8);
    let (ukf, _) = ukf_update(&prior, &y, &sys, &rule).unwrap();
    let (m1, p1) = scalar_plf(0.0, 0.5, 0.1, 0.4, 1);
    assert!((ukf.mean()[0] - m1).abs() < 1e-12);
    assert!((ukf.cov()[(0, 0)] - p1).abs() < 1e-12);
}

/// Posterior mean of a scalar model by dense grid quadrature.
fn grid_posterior_mean(log_post: impl Fn(f64) -> f64) -> f64 {
    let points = grid(-6.0, 6.0, 100_000, log_post);
    let peak = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (num, den) = points.iter().fold((0.0, 0.0), |(num, den), &(x, lp)| {
        let w = (lp - peak).exp();
        (num + x * w, den + w)
    });
    num / den
}

#[test]
fn sine_posterior_reference_values() {
    let bayes = grid_posterior_mean(|x| -x * x - (0.4 - x.sin()).powi(2) / 0.2);
    assert!((bayes - 0.394396).abs() < 1e-5, "{bayes}");
    let (plf, _) = scalar_plf(0.0, 0.5, 0.1, 0.4, 50);
    let (ukf, _) = scalar_plf(0.0, 0.5, 0.1, 0.4, 1);
    assert!((plf - 0.345376).abs() < 1e-5, "{plf}");
    assert!((ukf - 0.388924).abs() < 1e-5, "{ukf}");
}

#[test]
fn posteriors_stay_positive_definite_on_every_benchmark() {
    for name in SystemName::ALL {
        let case = name.noise_cases()[0];
        let bench = make_system(name, case).unwrap();
        for seed in 0..3 {
            let traj = simulate_benchmark(&bench, 100, seed).unwrap();
            for filter in FilterKind::NAMES.map(|n| FilterKind::from_name(n).unwrap()) {
                let mut belief = bench.initial.clone();
                for t in 0..traj.len() {
                    let step = match filter.step(&belief, &traj.inputs[t], t, &traj.measurements[t], &bench.system) {
                        Ok(step) => step,
                        Err(e) => panic!("{name} {filter} seed {seed} step {t}: {e}"),
                    };
                    let eig = step.posterior.cov().clone().symmetric_eigenvalues();
                    assert!(eig.min() > 0.0, "{name} {filter} seed {seed} step {t}");
                    belief = step.posterior;
                }
            }
        }
    }
    assert_eq!(NoiseCase::GaussA.as_str(), "gauss");
}
