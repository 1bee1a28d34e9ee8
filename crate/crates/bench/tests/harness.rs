use nalgebra::{DMatrix, DVector};
use nano_bench::harness::{summarize, Metadata};
use nano_bench::{rmse, run_benchmark, run_trial, run_trial_seed, BenchConfig};
use nano_filter::models::{make_system, oscillator_dynamics, simulate_benchmark, NoiseCase, NoiseModel, SystemName};
use nano_filter::{FilterKind, Gaussian};
use proptest::prelude::*;

fn metadata() -> Metadata {
    Metadata {
        system: "oscillator".into(),
        noise: "gauss".into(),
        trials: 0,
        horizon: 0,
        base_seed: 0,
        config: String::new(),
        version: String::new(),
        timestamp: 0,
        quantile_method: String::new(),
    }
}

fn small_config(system: SystemName, trials: usize, horizon: usize) -> BenchConfig {
    let mut cfg = BenchConfig::new(system, system.noise_cases()[0]);
    cfg.trials = trials;
    cfg.horizon = horizon;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rmse_matches_brute_force(
        m in 1usize..20,
        n in 1usize..5,
        vals in prop::collection::vec(-10.0..10.0f64, 200),
    ) {
        let truth: Vec<DVector<f64>> = (0..m).map(|t| DVector::from_column_slice(&vals[t * n..(t + 1) * n])).collect();
        let est: Vec<DVector<f64>> =
            (0..m).map(|t| DVector::from_column_slice(&vals[100 + t * n..100 + (t + 1) * n])).collect();
        let mut total = 0.0;
        for t in 0..m {
            for i in 0..n {
                total += (truth[t][i] - est[t][i]).powi(2);
            }
        }
        let want = (total / (m * n) as f64).sqrt();
        prop_assert!((rmse(&truth, &est).unwrap() - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn rmse_spec_examples() {
    let truth = vec![DVector::from_element(2, 0.0); 3];
    let off = vec![DVector::from_element(2, 1.0); 3];
    assert_eq!(rmse(&truth, &off).unwrap(), 1.0);
    assert_eq!(rmse(&off, &off).unwrap(), 0.0);
}

#[test]
fn trials_are_deterministic_per_seed() {
    let cfg = small_config(SystemName::Growth, 1, 30);
    for filter in cfg.filter_kinds().unwrap() {
        let a = run_trial_seed(&cfg, &filter, 17).unwrap();
        let b = run_trial_seed(&cfg, &filter, 17).unwrap();
        assert_eq!(a.rmse, b.rmse);
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.mean_iters, b.mean_iters);
    }
}

/// Iterates the filtering Riccati recursion to its fixed point.
fn riccati_fixed_point(a: &DMatrix<f64>, h: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut p = DMatrix::identity(n, n);
    for _ in 0..10_000 {
        let pred = a * &p * a.transpose() + q;
        let s = h * &pred * h.transpose() + r;
        let k = &pred * h.transpose() * s.try_inverse().unwrap();
        p = (DMatrix::identity(n, n) - &k * h) * &pred;
    }
    p
}

#[test]
fn oscillator_error_covariance_reaches_riccati_fixed_point() {
    let bench = make_system(SystemName::Oscillator, NoiseCase::GaussA).unwrap();
    let dynamics = oscillator_dynamics();
    let fixed = riccati_fixed_point(&dynamics.transition, &dynamics.observation, bench.system.q(), bench.system.r());
    let want = fixed.trace();

    let mut belief = bench.initial.clone();
    let traj = simulate_benchmark(&bench, 50, 0).unwrap();
    for t in 0..50 {
        belief = FilterKind::Ekf
            .step(&belief, &traj.inputs[t], t, &traj.measurements[t], &bench.system)
            .unwrap()
            .posterior;
    }
    assert!((belief.cov().trace() - want).abs() <= 0.1 * want);

    let trials = 400;
    let mut sum = 0.0;
    let mut count = 0;
    for seed in 0..trials {
        let traj = simulate_benchmark(&bench, 100, seed).unwrap();
        let result = run_trial(&bench, &FilterKind::Ekf, &traj);
        for e in &result.errors[49..] {
            sum += e.norm_squared();
            count += 1;
        }
    }
    let empirical = sum / count as f64;
    assert!((empirical - want).abs() <= 0.1 * want, "{empirical} vs {want}");
}

#[test]
fn noiseless_oscillator_ekf_is_accurate() {
    let mut bench = make_system(SystemName::Oscillator, NoiseCase::GaussA).unwrap();
    let tiny = DMatrix::identity(2, 2) * 1e-30;
    bench.process_noise = NoiseModel::gaussian(tiny.clone()).unwrap();
    bench.measurement_noise = NoiseModel::gaussian(tiny.clone()).unwrap();
    bench.initial = Gaussian::new(bench.initial.mean().clone(), tiny).unwrap();
    for seed in 0..5 {
        let traj = simulate_benchmark(&bench, 100, seed).unwrap();
        let result = run_trial(&bench, &FilterKind::Ekf, &traj);
        assert!(!result.diverged);
        assert!(result.rmse.unwrap() < 0.05);
    }
}

#[test]
fn single_trial_summary_has_zero_width_quartiles() {
    let cfg = small_config(SystemName::Oscillator, 1, 20);
    let (summary, results) = run_benchmark(&cfg).unwrap();
    for (name, f) in &summary.filters {
        let r = results.iter().find(|r| &r.filter == name).unwrap().rmse.unwrap();
        let s = f.rmse.unwrap();
        assert_eq!(s.mean, r);
        assert_eq!(s.median, r);
        assert_eq!(s.q1, s.q3);
    }
}

#[test]
fn summary_is_independent_of_result_order() {
    let cfg = small_config(SystemName::Growth, 6, 20);
    let (_, results) = run_benchmark(&cfg).unwrap();
    let forward = summarize(&results, metadata());
    let mut shuffled = results.clone();
    shuffled.reverse();
    shuffled.rotate_left(7);
    assert_eq!(forward, summarize(&shuffled, metadata()));
}

#[test]
fn filters_see_paired_trajectories_and_all_trials_are_accounted() {
    let cfg = small_config(SystemName::Growth, 4, 15);
    let (summary, results) = run_benchmark(&cfg).unwrap();
    assert_eq!(results.len(), 4 * 5);
    for seed in cfg.seeds() {
        for filter in cfg.filter_kinds().unwrap() {
            let standalone = run_trial_seed(&cfg, &filter, seed).unwrap();
            let batched = results.iter().find(|r| r.seed == seed && r.filter == filter.name()).unwrap();
            assert_eq!(standalone.errors, batched.errors);
        }
    }
    for f in summary.filters.values() {
        let counted = f.rmse.map_or(0, |s| s.count);
        assert_eq!(f.diverged + counted, cfg.trials);
    }
    let sorted = results.windows(2).all(|w| (&w[0].filter, w[0].seed) < (&w[1].filter, w[1].seed));
    assert!(sorted);
}
