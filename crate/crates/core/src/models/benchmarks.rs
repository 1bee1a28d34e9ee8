//! The five benchmark systems and their noise cases.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{dmatrix, dvector, DMatrix, DVector, Matrix3, Vector3};

use super::noise::NoiseModel;
use super::system::{Dynamics, DynamicalSystem, Linear};
use crate::error::{FilterError, Result};
use crate::gauss::Gaussian;

/// Input signal `u_t` as a function of the step index.
pub type InputSignal = Arc<dyn Fn(usize) -> DVector<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemName {
    Oscillator,
    SequenceForecast,
    Growth,
    RobotLocalization,
    SatelliteAttitude,
}

impl SystemName {
    pub const ALL: [SystemName; 5] = [
        SystemName::Oscillator,
        SystemName::SequenceForecast,
        SystemName::Growth,
        SystemName::RobotLocalization,
        SystemName::SatelliteAttitude,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemName::Oscillator => "oscillator",
            SystemName::SequenceForecast => "sequence_forecast",
            SystemName::Growth => "growth",
            SystemName::RobotLocalization => "robot_localization",
            SystemName::SatelliteAttitude => "satellite_attitude",
        }
    }

    pub fn noise_cases(self) -> &'static [NoiseCase] {
        match self {
            SystemName::SatelliteAttitude => &[NoiseCase::OutlierMixture],
            _ => &[NoiseCase::GaussA, NoiseCase::LaplaceB, NoiseCase::BetaC],
        }
    }
}

impl fmt::Display for SystemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemName {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "oscillator" => Ok(SystemName::Oscillator),
            "sequence_forecast" | "sequence" => Ok(SystemName::SequenceForecast),
            "growth" => Ok(SystemName::Growth),
            "robot_localization" | "robot" => Ok(SystemName::RobotLocalization),
            "satellite_attitude" | "satellite" => Ok(SystemName::SatelliteAttitude),
            other => Err(FilterError::Config(format!("unknown system '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseCase {
    GaussA,
    LaplaceB,
    BetaC,
    OutlierMixture,
}

impl NoiseCase {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseCase::GaussA => "gauss",
            NoiseCase::LaplaceB => "laplace",
            NoiseCase::BetaC => "beta",
            NoiseCase::OutlierMixture => "outlier",
        }
    }
}

impl fmt::Display for NoiseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseCase {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gauss" | "gaussian" | "a" => Ok(NoiseCase::GaussA),
            "laplace" | "b" => Ok(NoiseCase::LaplaceB),
            "beta" | "c" => Ok(NoiseCase::BetaC),
            "outlier" | "outlier_mixture" | "mixture" => Ok(NoiseCase::OutlierMixture),
            other => Err(FilterError::Config(format!("unknown noise case '{other}'"))),
        }
    }
}

/// Everything needed to simulate and filter one benchmark configuration.
#[derive(Clone)]
pub struct Benchmark {
    pub name: SystemName,
    pub case: NoiseCase,
    pub system: DynamicalSystem,
    pub process_noise: NoiseModel,
    pub measurement_noise: NoiseModel,
    pub initial: Gaussian,
    pub input: InputSignal,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("case", &self.case)
            .field("system", &self.system)
            .finish()
    }
}

/// Damped linear oscillator time step.
pub const OSCILLATOR_DT: f64 = 0.1;
pub const ROBOT_DT: f64 = 0.1;
pub const SATELLITE_DT: f64 = 0.01;
pub const GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];
pub const MAGNETIC_FIELD: [f64; 3] = [27.75, -3.65, 47.21];
/// Landmark positions for the robot measurement model.
pub const ROBOT_LANDMARKS: [[f64; 2]; 3] = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];

/// `exp(dt·[[a, b], [−b, a]]) = e^{a·dt}·[[cos b·dt, sin b·dt], [−sin b·dt, cos b·dt]]`.
pub fn rotation_generator_exp(a: f64, b: f64, dt: f64) -> DMatrix<f64> {
    let decay = (a * dt).exp();
    let (s, c) = (b * dt).sin_cos();
    dmatrix![decay * c, decay * s; -decay * s, decay * c]
}

pub fn oscillator_dynamics() -> Linear {
    Linear::new(
        rotation_generator_exp(-0.1, 2.0, OSCILLATOR_DT),
        dmatrix![1.0, 1.0; -0.5, 1.0],
    )
}

/// `x⁺ = x + 0.1·[[−1, 0], [0.1, −1]]x + 0.1·cos(x)`, `y = x + sin(x)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequenceForecast;

const SEQ_A: [[f64; 2]; 2] = [[-1.0, 0.0], [0.1, -1.0]];

impl Dynamics for SequenceForecast {
    fn state_dim(&self) -> usize {
        2
    }
    fn measurement_dim(&self) -> usize {
        2
    }
    fn transition(&self, x: &DVector<f64>, _u: &DVector<f64>, _t: usize) -> Result<DVector<f64>> {
        Ok(DVector::from_fn(2, |i, _| {
            let ax = SEQ_A[i][0] * x[0] + SEQ_A[i][1] * x[1];
            x[i] + 0.1 * ax + 0.1 * x[i].cos()
        }))
    }
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x.map(|v| v + v.sin()))
    }
    fn measure_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        for (o, v) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *o = v + v.sin();
        }
        Ok(())
    }
    fn transition_jacobian(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
        _t: usize,
    ) -> Option<Result<DMatrix<f64>>> {
        Some(Ok(DMatrix::from_fn(2, 2, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id + 0.1 * SEQ_A[i][j] - if i == j { 0.1 * x[i].sin() } else { 0.0 }
        })))
    }
    fn measurement_jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        Some(Ok(DMatrix::from_diagonal(&x.map(|v| 1.0 + v.cos()))))
    }
    fn measurement_hessians(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some(Ok((0..2)
            .map(|j| {
                let mut h = DMatrix::zeros(2, 2);
                h[(j, j)] = -x[j].sin();
                h
            })
            .collect()))
    }
}

/// Coupled three-dimensional growth model with `8·cos(t)` forcing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Growth;

// (divisor, cross gain, rational gain, denominator weight) per component; the
// coupled partner of component i is (i + 1) % 3.
const GROWTH: [(f64, f64, f64); 3] = [(2.0, 25.0, 0.3), (3.0, 30.0, 0.5), (4.0, 35.0, 0.7)];
const GROWTH_PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (0, 2)];

impl Dynamics for Growth {
    fn state_dim(&self) -> usize {
        3
    }
    fn measurement_dim(&self) -> usize {
        3
    }
    fn transition(&self, x: &DVector<f64>, _u: &DVector<f64>, t: usize) -> Result<DVector<f64>> {
        let forcing = 8.0 * (t as f64).cos();
        Ok(DVector::from_fn(3, |i, _| {
            let k = (i + 1) % 3;
            let (div, gain, w) = GROWTH[i];
            (x[i] + 0.1 * x[k]) / div + gain * x[i] / (1.0 + x[i] * x[i] + w * x[k] * x[k]) + forcing
        }))
    }
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut y = DVector::zeros(3);
        self.measure_into(x, &mut y)?;
        Ok(y)
    }
    fn measure_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let x = x.as_slice();
        for (o, &(a, b)) in out.as_mut_slice().iter_mut().zip(&GROWTH_PAIRS) {
            *o = (x[a] * x[a] + x[b] * x[b]) / 20.0;
        }
        Ok(())
    }
    fn transition_jacobian(
        &self,
        x: &DVector<f64>,
        _u: &DVector<f64>,
        _t: usize,
    ) -> Option<Result<DMatrix<f64>>> {
        let mut jac = DMatrix::zeros(3, 3);
        for i in 0..3 {
            let k = (i + 1) % 3;
            let (div, gain, w) = GROWTH[i];
            let den = 1.0 + x[i] * x[i] + w * x[k] * x[k];
            jac[(i, i)] = 1.0 / div + gain * (den - 2.0 * x[i] * x[i]) / (den * den);
            jac[(i, k)] = 0.1 / div - gain * x[i] * 2.0 * w * x[k] / (den * den);
        }
        Some(Ok(jac))
    }
    fn measurement_jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        let mut jac = DMatrix::zeros(3, 3);
        for (j, &(a, b)) in GROWTH_PAIRS.iter().enumerate() {
            jac[(j, a)] = x[a] / 10.0;
            jac[(j, b)] = x[b] / 10.0;
        }
        Some(Ok(jac))
    }
    fn measurement_hessians(&self, _x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        Some(Ok(GROWTH_PAIRS
            .iter()
            .map(|&(a, b)| {
                let mut h = DMatrix::zeros(3, 3);
                h[(a, a)] = 0.1;
                h[(b, b)] = 0.1;
                h
            })
            .collect()))
    }
}

/// Unicycle pose `[p_x, p_y, φ]` observing landmarks in the body frame.
#[derive(Debug, Clone)]
pub struct RobotLocalization {
    pub landmarks: Vec<[f64; 2]>,
    pub dt: f64,
}

impl Default for RobotLocalization {
    fn default() -> Self {
        RobotLocalization {
            landmarks: ROBOT_LANDMARKS.to_vec(),
            dt: ROBOT_DT,
        }
    }
}

/// `v_t = 5 sin(πt/20)`, `ω_t = 3 sin(πt/20)`.
pub fn robot_input(t: usize) -> DVector<f64> {
    let s = (std::f64::consts::PI * t as f64 / 20.0).sin();
    dvector![5.0 * s, 3.0 * s]
}

impl Dynamics for RobotLocalization {
    fn state_dim(&self) -> usize {
        3
    }
    fn measurement_dim(&self) -> usize {
        2 * self.landmarks.len()
    }
    fn input_dim(&self) -> usize {
        2
    }
    fn transition(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> Result<DVector<f64>> {
        if u.len() != 2 {
            return Err(FilterError::dim("robot input", 2, u.len()));
        }
        let (v, w) = (u[0], u[1]);
        Ok(dvector![
            x[0] + v * x[2].cos() * self.dt,
            x[1] + v * x[2].sin() * self.dt,
            x[2] + w * self.dt
        ])
    }
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut y = DVector::zeros(self.measurement_dim());
        self.measure_into(x, &mut y)?;
        Ok(y)
    }
    fn measure_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let (s, c) = x[2].sin_cos();
        for (i, m) in self.landmarks.iter().enumerate() {
            let (dx, dy) = (x[0] - m[0], x[1] - m[1]);
            out[2 * i] = c * dx + s * dy;
            out[2 * i + 1] = -s * dx + c * dy;
        }
        Ok(())
    }
    fn transition_jacobian(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        _t: usize,
    ) -> Option<Result<DMatrix<f64>>> {
        let (s, c) = x[2].sin_cos();
        let v = u[0];
        Some(Ok(dmatrix![
            1.0, 0.0, -v * s * self.dt;
            0.0, 1.0, v * c * self.dt;
            0.0, 0.0, 1.0
        ]))
    }
    fn measurement_jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        let (s, c) = x[2].sin_cos();
        let mut jac = DMatrix::zeros(self.measurement_dim(), 3);
        for (i, m) in self.landmarks.iter().enumerate() {
            let (dx, dy) = (x[0] - m[0], x[1] - m[1]);
            jac[(2 * i, 0)] = c;
            jac[(2 * i, 1)] = s;
            jac[(2 * i, 2)] = -s * dx + c * dy;
            jac[(2 * i + 1, 0)] = -s;
            jac[(2 * i + 1, 1)] = c;
            jac[(2 * i + 1, 2)] = -c * dx - s * dy;
        }
        Some(Ok(jac))
    }
    fn measurement_hessians(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let (s, c) = x[2].sin_cos();
        let mut out = Vec::with_capacity(self.measurement_dim());
        for m in &self.landmarks {
            let (dx, dy) = (x[0] - m[0], x[1] - m[1]);
            out.push(dmatrix![
                0.0, 0.0, -s;
                0.0, 0.0, c;
                -s, c, -c * dx - s * dy
            ]);
            out.push(dmatrix![
                0.0, 0.0, -c;
                0.0, 0.0, -s;
                -c, -s, s * dx - c * dy
            ]);
        }
        Some(Ok(out))
    }
}

/// Euler-angle attitude `[θ_p, θ_r, θ_y]` driven by body rates, observing gravity
/// and the magnetic field in the body frame.
#[derive(Debug, Clone)]
pub struct SatelliteAttitude {
    pub dt: f64,
    pub gravity: Vector3<f64>,
    pub magnetic: Vector3<f64>,
}

impl Default for SatelliteAttitude {
    fn default() -> Self {
        SatelliteAttitude {
            dt: SATELLITE_DT,
            gravity: Vector3::from(GRAVITY),
            magnetic: Vector3::from(MAGNETIC_FIELD),
        }
    }
}

/// `ω_t = (π/18)·sin(2·Δt·π·t)·1`.
pub fn satellite_input(t: usize) -> DVector<f64> {
    let w = std::f64::consts::PI / 18.0 * (2.0 * SATELLITE_DT * std::f64::consts::PI * t as f64).sin();
    DVector::from_element(3, w)
}

/// Cosine of pitch below which the rate map is treated as singular.
pub const GIMBAL_LOCK_COS: f64 = 1e-6;

fn rot_x(r: f64, order: u8) -> Matrix3<f64> {
    let (s, c) = r.sin_cos();
    match order {
        0 => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        1 => Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s),
        _ => Matrix3::new(0.0, 0.0, 0.0, 0.0, -c, s, 0.0, -s, -c),
    }
}

fn rot_y(p: f64, order: u8) -> Matrix3<f64> {
    let (s, c) = p.sin_cos();
    match order {
        0 => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        1 => Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s),
        _ => Matrix3::new(-c, 0.0, -s, 0.0, 0.0, 0.0, s, 0.0, -c),
    }
}

fn rot_z(y: f64, order: u8) -> Matrix3<f64> {
    let (s, c) = y.sin_cos();
    match order {
        0 => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        1 => Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0),
        _ => Matrix3::new(-c, s, 0.0, -s, -c, 0.0, 0.0, 0.0, 0.0),
    }
}

impl SatelliteAttitude {
    /// Body-to-world rotation `C(θ) = R_z(θ_y)·R_y(θ_p)·R_x(θ_r)`.
    pub fn rotation(theta: &DVector<f64>) -> Matrix3<f64> {
        Self::rotation_derivative(theta, [0, 0, 0])
    }

    /// Partial derivative of `C(θ)` of order `orders = [∂p, ∂r, ∂y]` (each ≤ 2).
    fn rotation_derivative(theta: &DVector<f64>, orders: [u8; 3]) -> Matrix3<f64> {
        rot_z(theta[2], orders[2]) * rot_y(theta[0], orders[0]) * rot_x(theta[1], orders[1])
    }

    /// Euler-rate map `Ω(θ)`; errors near gimbal lock.
    pub fn rate_map(theta: &DVector<f64>) -> Result<Matrix3<f64>> {
        let (sp, cp) = theta[0].sin_cos();
        let (sr, cr) = theta[1].sin_cos();
        if cp.abs() < GIMBAL_LOCK_COS {
            return Err(FilterError::GimbalLock { cos_pitch: cp.abs() });
        }
        Ok(Matrix3::new(
            1.0,
            sp * sr / cp,
            cr * sp / cp,
            0.0,
            cr,
            -sr,
            0.0,
            sr / cp,
            cr / cp,
        ))
    }
}

impl Dynamics for SatelliteAttitude {
    fn state_dim(&self) -> usize {
        3
    }
    fn measurement_dim(&self) -> usize {
        6
    }
    fn input_dim(&self) -> usize {
        3
    }
    fn transition(&self, x: &DVector<f64>, u: &DVector<f64>, _t: usize) -> Result<DVector<f64>> {
        if u.len() != 3 {
            return Err(FilterError::dim("satellite input", 3, u.len()));
        }
        let omega = Vector3::new(u[0], u[1], u[2]);
        let rate = Self::rate_map(x)? * omega * self.dt;
        Ok(x + DVector::from_column_slice(rate.as_slice()))
    }
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut y = DVector::zeros(6);
        self.measure_into(x, &mut y)?;
        Ok(y)
    }
    fn measure_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let ct = Self::rotation(x).transpose();
        let (a, b) = (ct * self.gravity, ct * self.magnetic);
        for (o, v) in out.as_mut_slice().iter_mut().zip(a.iter().chain(b.iter())) {
            *o = *v;
        }
        Ok(())
    }
    fn transition_jacobian(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        _t: usize,
    ) -> Option<Result<DMatrix<f64>>> {
        let (sp, cp) = x[0].sin_cos();
        let (sr, cr) = x[1].sin_cos();
        if cp.abs() < GIMBAL_LOCK_COS {
            return Some(Err(FilterError::GimbalLock { cos_pitch: cp.abs() }));
        }
        let omega = Vector3::new(u[0], u[1], u[2]);
        let (tp, sec) = (sp / cp, 1.0 / cp);
        let d_pitch = Matrix3::new(
            0.0,
            sr * sec * sec,
            cr * sec * sec,
            0.0,
            0.0,
            0.0,
            0.0,
            sr * sec * tp,
            cr * sec * tp,
        );
        let d_roll = Matrix3::new(0.0, tp * cr, -tp * sr, 0.0, -sr, -cr, 0.0, cr * sec, -sr * sec);
        let mut jac = DMatrix::identity(3, 3);
        let cp_col = d_pitch * omega * self.dt;
        let cr_col = d_roll * omega * self.dt;
        for i in 0..3 {
            jac[(i, 0)] += cp_col[i];
            jac[(i, 1)] += cr_col[i];
        }
        Some(Ok(jac))
    }
    fn measurement_jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        let mut jac = DMatrix::zeros(6, 3);
        for k in 0..3 {
            let mut orders = [0u8; 3];
            orders[k] = 1;
            let dct = Self::rotation_derivative(x, orders).transpose();
            let (a, b) = (dct * self.gravity, dct * self.magnetic);
            for i in 0..3 {
                jac[(i, k)] = a[i];
                jac[(i + 3, k)] = b[i];
            }
        }
        Some(Ok(jac))
    }
    fn measurement_hessians(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let mut out = vec![DMatrix::zeros(3, 3); 6];
        for k in 0..3 {
            for l in 0..=k {
                let mut orders = [0u8; 3];
                orders[k] += 1;
                orders[l] += 1;
                let dct = Self::rotation_derivative(x, orders).transpose();
                let (a, b) = (dct * self.gravity, dct * self.magnetic);
                for i in 0..3 {
                    out[i][(k, l)] = a[i];
                    out[i][(l, k)] = a[i];
                    out[i + 3][(k, l)] = b[i];
                    out[i + 3][(l, k)] = b[i];
                }
            }
        }
        Some(Ok(out))
    }
}

fn scaled_identity(n: usize, s: f64) -> DMatrix<f64> {
    DMatrix::identity(n, n) * s
}

/// Builds one benchmark with its filter-side `Q`/`R`.
///
/// Gaussian and Laplace cases hand the filters the true noise covariance; Beta
/// cases use `diag(var_β)` and ignore the Beta mean; the outlier mixture uses the
/// covariance of the nominal (non-outlier) component.
pub fn make_system(name: SystemName, case: NoiseCase) -> Result<Benchmark> {
    if !name.noise_cases().contains(&case) {
        return Err(FilterError::Config(format!(
            "noise case '{case}' is not defined for system '{name}'"
        )));
    }
    let pair = |kind: NoiseCase, (qv, rv): (f64, f64), (bq, br): ((f64, f64), (f64, f64)), n: usize, m: usize| {
        match kind {
            NoiseCase::GaussA => Ok((
                NoiseModel::gaussian(scaled_identity(n, qv))?,
                NoiseModel::gaussian(scaled_identity(m, rv))?,
            )),
            NoiseCase::LaplaceB => Ok((
                NoiseModel::laplace(scaled_identity(n, qv))?,
                NoiseModel::laplace(scaled_identity(m, rv))?,
            )),
            NoiseCase::BetaC => Ok((
                NoiseModel::beta_replicated(bq.0, bq.1, n)?,
                NoiseModel::beta_replicated(br.0, br.1, m)?,
            )),
            NoiseCase::OutlierMixture => Err(FilterError::Config("unreachable".into())),
        }
    };
    let no_input: InputSignal = Arc::new(|_| DVector::zeros(0));
    let (dynamics, (process, measurement), initial, input): (Arc<dyn Dynamics>, (NoiseModel, NoiseModel), Gaussian, InputSignal) =
        match name {
            SystemName::Oscillator => (
                Arc::new(oscillator_dynamics()),
                pair(case, (0.5, 1.0), ((1.5, 2.5), (2.0, 5.0)), 2, 2)?,
                Gaussian::new(dvector![2.5, -5.0], DMatrix::identity(2, 2))?,
                no_input,
            ),
            SystemName::SequenceForecast => (
                Arc::new(SequenceForecast),
                pair(case, (4.0, 1.0), ((1.5, 2.0), (3.0, 7.0)), 2, 2)?,
                Gaussian::new(DVector::zeros(2), DMatrix::identity(2, 2))?,
                no_input,
            ),
            SystemName::Growth => (
                Arc::new(Growth),
                pair(case, (1.0, 1.0), ((2.0, 2.0), (2.0, 2.0)), 3, 3)?,
                Gaussian::new(DVector::from_element(3, 5.0), scaled_identity(3, 5.0))?,
                no_input,
            ),
            SystemName::RobotLocalization => {
                let robot = RobotLocalization::default();
                let m = robot.measurement_dim();
                (
                    Arc::new(robot),
                    pair(case, (0.01, 0.01), ((4.0, 6.0), (4.0, 6.0)), 3, m)?,
                    Gaussian::new(DVector::zeros(3), DMatrix::identity(3, 3))?,
                    Arc::new(robot_input),
                )
            }
            SystemName::SatelliteAttitude => {
                let process = NoiseModel::mixture(vec![
                    (0.9, NoiseModel::laplace(scaled_identity(3, 1e-5))?),
                    (0.1, NoiseModel::laplace(scaled_identity(3, 1e-2))?),
                ])?;
                let measurement = NoiseModel::mixture(vec![
                    (0.85, NoiseModel::gaussian(scaled_identity(6, 1e-4))?),
                    (0.15, NoiseModel::beta_replicated(1.2, 1.5, 6)?),
                ])?;
                (
                    Arc::new(SatelliteAttitude::default()),
                    (process, measurement),
                    Gaussian::new(DVector::zeros(3), scaled_identity(3, 1e-3))?,
                    Arc::new(satellite_input),
                )
            }
        };
    let (q, r) = match case {
        NoiseCase::OutlierMixture => (scaled_identity(3, 1e-5), scaled_identity(6, 1e-4)),
        _ => (process.filter_covariance(), measurement.filter_covariance()),
    };
    let system = DynamicalSystem::new(name.as_str(), dynamics, q, r)?;
    Ok(Benchmark {
        name,
        case,
        system,
        process_noise: process,
        measurement_noise: measurement,
        initial,
        input,
    })
}
