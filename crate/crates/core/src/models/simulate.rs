use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::benchmarks::{Benchmark, InputSignal};
use super::noise::NoiseModel;
use super::system::DynamicalSystem;
use crate::error::{FilterError, Result};
use crate::gauss::Gaussian;

/// Ground-truth states `x_0..x_M`, inputs `u_0..u_{M-1}` and measurements `y_1..y_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub seed: u64,
}

impl Trajectory {
    /// Number of filtering steps `M`.
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }
}

fn draw_initial(x0: &Gaussian, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let white = DVector::from_fn(x0.dim(), |_, _| StandardNormal.sample(rng));
    x0.mean() + x0.chol_lower() * white
}

/// Simulates `x_{t+1} = f(x_t, u_t, t) + ξ_t`, `y_{t+1} = g(x_{t+1}) + ζ_{t+1}`.
///
/// All randomness comes from one ChaCha8 stream seeded with `seed`.
pub fn simulate(
    sys: &DynamicalSystem,
    process: &NoiseModel,
    measurement: &NoiseModel,
    x0: &Gaussian,
    input: &InputSignal,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(FilterError::Config("trajectory length must be at least 1".into()));
    }
    if process.dim() != sys.state_dim() {
        return Err(FilterError::dim("process noise", sys.state_dim(), process.dim()));
    }
    if measurement.dim() != sys.measurement_dim() {
        return Err(FilterError::dim("measurement noise", sys.measurement_dim(), measurement.dim()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps);
    let mut measurements = Vec::with_capacity(steps);
    states.push(draw_initial(x0, &mut rng));
    for t in 0..steps {
        let u = input(t);
        let x = sys.f(&states[t], &u, t)? + process.sample(&mut rng);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FilterError::NonFiniteState { step: t + 1 });
        }
        let y = sys.g(&x)? + measurement.sample(&mut rng);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FilterError::NonFiniteState { step: t + 1 });
        }
        states.push(x);
        inputs.push(u);
        measurements.push(y);
    }
    Ok(Trajectory {
        states,
        inputs,
        measurements,
        seed,
    })
}

/// [`simulate`] with the benchmark's own noise models, initial belief and input.
pub fn simulate_benchmark(bench: &Benchmark, steps: usize, seed: u64) -> Result<Trajectory> {
    simulate(
        &bench.system,
        &bench.process_noise,
        &bench.measurement_noise,
        &bench.initial,
        &bench.input,
        steps,
        seed,
    )
}
