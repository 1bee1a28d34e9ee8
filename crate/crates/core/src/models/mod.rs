//! Benchmark systems, noise families and the ground-truth simulator.

mod benchmarks;
mod noise;
mod simulate;
mod system;

pub use benchmarks::{
    make_system, oscillator_dynamics, robot_input, rotation_generator_exp, satellite_input,
    Benchmark, Growth, InputSignal, NoiseCase, RobotLocalization, SatelliteAttitude,
    SequenceForecast, SystemName, GIMBAL_LOCK_COS, GRAVITY, MAGNETIC_FIELD, OSCILLATOR_DT,
    ROBOT_DT, ROBOT_LANDMARKS, SATELLITE_DT,
};
pub use noise::{NoiseKind, NoiseModel};
pub use simulate::{simulate, simulate_benchmark, Trajectory};
pub use system::{DynamicalSystem, Dynamics, FnDynamics, Linear};
