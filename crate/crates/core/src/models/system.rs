use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{FilterError, Result};
use crate::gauss::{cholesky, fd_hessian, fd_jacobian, symmetrize};

/// Transition and measurement functions of a discrete-time state-space model
///
/// `x_{t+1} = f(x_t, u_t, t) + ξ_t`, `y_t = g(x_t) + ζ_t`.
///
/// Analytic derivatives are optional; [`DynamicalSystem`] falls back to finite
/// differences when a method returns `None`.
pub trait Dynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn measurement_dim(&self) -> usize;
    fn input_dim(&self) -> usize {
        0
    }

    fn transition(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> Result<DVector<f64>>;

    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// `measure(x)` written into `out`, which holds `measurement_dim()` entries.
    fn measure_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        let y = self.measure(x)?;
        if y.len() != out.len() {
            return Err(FilterError::dim("measurement output", out.len(), y.len()));
        }
        out.copy_from(&y);
        Ok(())
    }

    fn transition_jacobian(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        _t: usize,
    ) -> Option<Result<DMatrix<f64>>> {
        None
    }

    fn measurement_jacobian(&self, _x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        None
    }

    /// One `n×n` Hessian per measurement component.
    fn measurement_hessians(&self, _x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        None
    }
}

/// A model together with its process and measurement noise covariances.
#[derive(Clone)]
pub struct DynamicalSystem {
    name: String,
    dynamics: Arc<dyn Dynamics>,
    process_cov: DMatrix<f64>,
    measurement_cov: DMatrix<f64>,
    measurement_precision: DMatrix<f64>,
}

impl fmt::Debug for DynamicalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicalSystem")
            .field("name", &self.name)
            .field("n", &self.state_dim())
            .field("m", &self.measurement_dim())
            .field("process_cov", &self.process_cov)
            .field("measurement_cov", &self.measurement_cov)
            .finish()
    }
}

fn is_psd(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    let asym = (m - m.transpose()).amax();
    asym <= 1e-12 * scale
        && SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .all(|&ev| ev >= -1e-12 * scale)
}

impl DynamicalSystem {
    /// Validates `Q` (symmetric PSD, `n×n`) and `R` (symmetric PD, `m×m`).
    pub fn new(
        name: impl Into<String>,
        dynamics: Arc<dyn Dynamics>,
        process_cov: DMatrix<f64>,
        measurement_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let n = dynamics.state_dim();
        let m = dynamics.measurement_dim();
        if process_cov.shape() != (n, n) {
            return Err(FilterError::dim("process covariance", n, process_cov.nrows()));
        }
        if measurement_cov.shape() != (m, m) {
            return Err(FilterError::dim("measurement covariance", m, measurement_cov.nrows()));
        }
        if !is_psd(&process_cov) {
            return Err(FilterError::NotPositiveDefinite("process covariance"));
        }
        let measurement_cov = symmetrize(&measurement_cov);
        let chol = cholesky(&measurement_cov)
            .ok_or(FilterError::NotPositiveDefinite("measurement covariance"))?;
        let measurement_precision = symmetrize(&chol.inverse());
        Ok(DynamicalSystem {
            name: name.into(),
            dynamics,
            process_cov: symmetrize(&process_cov),
            measurement_cov,
            measurement_precision,
        })
    }

    /// Same model, different noise covariances.
    pub fn with_noise(&self, process_cov: DMatrix<f64>, measurement_cov: DMatrix<f64>) -> Result<Self> {
        DynamicalSystem::new(self.name.clone(), self.dynamics.clone(), process_cov, measurement_cov)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dynamics(&self) -> &Arc<dyn Dynamics> {
        &self.dynamics
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn measurement_dim(&self) -> usize {
        self.dynamics.measurement_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.dynamics.input_dim()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.process_cov
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.measurement_cov
    }

    pub fn r_inv(&self) -> &DMatrix<f64> {
        &self.measurement_precision
    }

    pub fn f(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> Result<DVector<f64>> {
        if x.len() != self.state_dim() {
            return Err(FilterError::dim("transition input", self.state_dim(), x.len()));
        }
        self.dynamics.transition(x, u, t)
    }

    pub fn g(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.state_dim() {
            return Err(FilterError::dim("measurement input", self.state_dim(), x.len()));
        }
        self.dynamics.measure(x)
    }

    /// [`Self::g`] without allocating; `out` must hold `measurement_dim()` entries.
    pub fn g_into(&self, x: &DVector<f64>, out: &mut DVector<f64>) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(FilterError::dim("measurement input", self.state_dim(), x.len()));
        }
        if out.len() != self.measurement_dim() {
            return Err(FilterError::dim("measurement output", self.measurement_dim(), out.len()));
        }
        self.dynamics.measure_into(x, out)
    }

    pub fn f_jacobian(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> Result<DMatrix<f64>> {
        match self.dynamics.transition_jacobian(x, u, t) {
            Some(j) => j,
            None => fd_jacobian(|z| self.f(z, u, t), x, None),
        }
    }

    pub fn g_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self.dynamics.measurement_jacobian(x) {
            Some(j) => j,
            None => fd_jacobian(|z| self.g(z), x, None),
        }
    }

    pub fn g_hessians(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        match self.dynamics.measurement_hessians(x) {
            Some(h) => h,
            None => (0..self.measurement_dim())
                .map(|j| fd_hessian(|z| Ok(self.g(z)?[j]), x, None))
                .collect(),
        }
    }
}

type TransitionFn = dyn Fn(&DVector<f64>, &DVector<f64>, usize) -> Result<DVector<f64>> + Send + Sync;
type MeasureFn = dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync;
type JacobianFn = dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync;
type HessiansFn = dyn Fn(&DVector<f64>) -> Result<Vec<DMatrix<f64>>> + Send + Sync;

/// Closure-backed [`Dynamics`] for ad-hoc models.
pub struct FnDynamics {
    n: usize,
    m: usize,
    transition: Box<TransitionFn>,
    measure: Box<MeasureFn>,
    g_jac: Option<Box<JacobianFn>>,
    g_hess: Option<Box<HessiansFn>>,
}

impl FnDynamics {
    pub fn new<F, G>(n: usize, m: usize, transition: F, measure: G) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, usize) -> Result<DVector<f64>> + Send + Sync + 'static,
        G: Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
    {
        FnDynamics {
            n,
            m,
            transition: Box::new(transition),
            measure: Box::new(measure),
            g_jac: None,
            g_hess: None,
        }
    }

    pub fn with_g_jacobian<J>(mut self, j: J) -> Self
    where
        J: Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.g_jac = Some(Box::new(j));
        self
    }

    pub fn with_g_hessians<H>(mut self, h: H) -> Self
    where
        H: Fn(&DVector<f64>) -> Result<Vec<DMatrix<f64>>> + Send + Sync + 'static,
    {
        self.g_hess = Some(Box::new(h));
        self
    }
}

impl Dynamics for FnDynamics {
    fn state_dim(&self) -> usize {
        self.n
    }
    fn measurement_dim(&self) -> usize {
        self.m
    }
    fn transition(&self, x: &DVector<f64>, u: &DVector<f64>, t: usize) -> Result<DVector<f64>> {
        (self.transition)(x, u, t)
    }
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        (self.measure)(x)
    }
    fn measurement_jacobian(&self, x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        self.g_jac.as_ref().map(|j| j(x))
    }
    fn measurement_hessians(&self, x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        self.g_hess.as_ref().map(|h| h(x))
    }
}

/// `x_{t+1} = A x_t`, `y_t = H x_t + c`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub transition: DMatrix<f64>,
    pub observation: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl Linear {
    pub fn new(transition: DMatrix<f64>, observation: DMatrix<f64>) -> Self {
        let m = observation.nrows();
        Linear {
            transition,
            observation,
            offset: DVector::zeros(m),
        }
    }

    pub fn with_offset(mut self, offset: DVector<f64>) -> Self {
        self.offset = offset;
        self
    }
}

impl Dynamics for Linear {
    fn state_dim(&self) -> usize {
        self.transition.nrows()
    }
    fn measurement_dim(&self) -> usize {
        self.observation.nrows()
    }
    fn transition(&self, x: &DVector<f64>, _u: &DVector<f64>, _t: usize) -> Result<DVector<f64>> {
        Ok(&self.transition * x)
    }
    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.observation * x + &self.offset)
    }
    fn transition_jacobian(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        _t: usize,
    ) -> Option<Result<DMatrix<f64>>> {
        Some(Ok(self.transition.clone()))
    }
    fn measurement_jacobian(&self, _x: &DVector<f64>) -> Option<Result<DMatrix<f64>>> {
        Some(Ok(self.observation.clone()))
    }
    fn measurement_hessians(&self, _x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        let n = self.state_dim();
        Some(Ok(vec![DMatrix::zeros(n, n); self.measurement_dim()]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn rejects_bad_covariances() {
        let lin = Arc::new(Linear::new(DMatrix::identity(2, 2), DMatrix::identity(1, 2)));
        assert!(DynamicalSystem::new("x", lin.clone(), DMatrix::zeros(2, 2), dmatrix![1.0]).is_ok());
        assert!(DynamicalSystem::new("x", lin.clone(), DMatrix::zeros(2, 2), dmatrix![0.0]).is_err());
        assert!(
            DynamicalSystem::new("x", lin.clone(), dmatrix![1.0, 0.0; 0.0, -1.0], dmatrix![1.0])
                .is_err()
        );
        assert!(DynamicalSystem::new("x", lin, DMatrix::zeros(3, 3), dmatrix![1.0]).is_err());
    }

    #[test]
    fn finite_difference_fallbacks() {
        let dynamics = FnDynamics::new(
            2,
            1,
            |x, _, _| Ok(x.map(|v| v.sin())),
            |x| Ok(dvector![x[0] * x[1] + x[0] * x[0]]),
        );
        let sys = DynamicalSystem::new(
            "fn",
            Arc::new(dynamics),
            DMatrix::identity(2, 2),
            dmatrix![1.0],
        )
        .unwrap();
        let x = dvector![0.5, -1.5];
        let jf = sys.f_jacobian(&x, &DVector::zeros(0), 0).unwrap();
        assert_abs_diff_eq!(jf, dmatrix![0.5f64.cos(), 0.0; 0.0, (-1.5f64).cos()], epsilon = 1e-8);
        let jg = sys.g_jacobian(&x).unwrap();
        assert_abs_diff_eq!(jg, dmatrix![2.0 * 0.5 - 1.5, 0.5], epsilon = 1e-8);
        let hg = sys.g_hessians(&x).unwrap();
        assert_abs_diff_eq!(hg[0], dmatrix![2.0, 1.0; 1.0, 0.0], epsilon = 1e-5);
    }
}
