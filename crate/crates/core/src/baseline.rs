//! EKF, UKF, IEKF and PLF steps in their textbook forms.
//!
//! Every step takes the posterior at time `t`, the input `u_t`, the time index `t`
//! and the measurement `y_{t+1}`, and returns the prior and posterior at `t + 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{FilterError, Result};
use crate::gauss::{cholesky, kl_divergence, symmetrize_psd, Gaussian, DEFAULT_JITTER_MAX};
use crate::models::DynamicalSystem;
use crate::nano::predict;
use crate::unscented::{sigma_points, SigmaPointRule};

/// Default iteration cap for IEKF and PLF.
pub const DEFAULT_MAX_ITER: usize = 10;
/// Default IEKF tolerance on the mean increment norm.
pub const DEFAULT_IEKF_TOL: f64 = 1e-6;
/// Default PLF tolerance on the KL divergence between consecutive posteriors.
pub const DEFAULT_PLF_TOL: f64 = 1e-6;

/// Output of one predict + update step.
#[derive(Debug, Clone)]
pub struct FilterStep {
    pub prior: Gaussian,
    pub posterior: Gaussian,
    /// Update iterations performed (1 for EKF and UKF).
    pub iterations: usize,
    /// `y − ŷ` at the final linearization.
    pub innovation: DVector<f64>,
    /// Set when the update failed and the step fell back to an initializer belief.
    pub fallback: bool,
}

fn check_measurement(sys: &DynamicalSystem, y: &DVector<f64>) -> Result<()> {
    if y.len() != sys.measurement_dim() {
        return Err(FilterError::dim("measurement", sys.measurement_dim(), y.len()));
    }
    Ok(())
}

fn psd_gaussian(mean: DVector<f64>, cov: &DMatrix<f64>) -> Result<Gaussian> {
    let fixed = symmetrize_psd(cov, DEFAULT_JITTER_MAX)?;
    Gaussian::new(mean, fixed.matrix)
}

/// EKF prediction `N(f(x̂, u), F P Fᵀ + Q)`.
pub fn ekf_predict(
    belief: &Gaussian,
    u: &DVector<f64>,
    t: usize,
    sys: &DynamicalSystem,
) -> Result<Gaussian> {
    let mean = sys.f(belief.mean(), u, t)?;
    let jac = sys.f_jacobian(belief.mean(), u, t)?;
    let cov = &jac * belief.cov() * jac.transpose() + sys.q();
    psd_gaussian(mean, &cov)
}

/// Kalman correction of `prior` for the linear model `y ≈ ŷ + H(x − x̂⁻)` with noise
/// covariance `noise`, using the Joseph form. `residual` is the innovation to apply.
fn joseph_update(
    prior: &Gaussian,
    h: &DMatrix<f64>,
    residual: &DVector<f64>,
    noise: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let p = prior.cov();
    let s = h * p * h.transpose() + noise;
    let chol = cholesky(&s).ok_or(FilterError::NotPositiveDefinite("innovation covariance"))?;
    let gain = chol.solve(&(h * p)).transpose();
    let n = prior.dim();
    let ikh = DMatrix::identity(n, n) - &gain * h;
    let cov = &ikh * p * ikh.transpose() + &gain * noise * gain.transpose();
    let mean = prior.mean() + &gain * residual;
    Ok((mean, cov, gain))
}

/// EKF measurement update of `prior`.
pub fn ekf_update(prior: &Gaussian, y: &DVector<f64>, sys: &DynamicalSystem) -> Result<(Gaussian, DVector<f64>)> {
    check_measurement(sys, y)?;
    let h = sys.g_jacobian(prior.mean())?;
    let innovation = y - sys.g(prior.mean())?;
    let (mean, cov, _) = joseph_update(prior, &h, &innovation, sys.r())?;
    Ok((psd_gaussian(mean, &cov)?, innovation))
}

pub fn ekf_step(
    belief: &Gaussian,
    u: &DVector<f64>,
    t: usize,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
) -> Result<FilterStep> {
    let prior = ekf_predict(belief, u, t, sys)?;
    let (posterior, innovation) = ekf_update(&prior, y, sys)?;
    Ok(FilterStep {
        prior,
        posterior,
        iterations: 1,
        innovation,
        fallback: false,
    })
}

/// Sigma-point moments of `g` under `belief`: `(ŷ, Φ = Cov[g], Ψ = Cov[x, g])`.
fn sigma_moments(
    belief: &Gaussian,
    sys: &DynamicalSystem,
    rule: &SigmaPointRule,
) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let set = sigma_points(belief, rule)?;
    let images = set
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let y = sys.g(p)?;
            if y.iter().all(|v| v.is_finite()) {
                Ok(y)
            } else {
                Err(FilterError::NonFiniteOutput { index: i })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let m = sys.measurement_dim();
    let mut y_hat = DVector::zeros(m);
    for (w, y) in set.mean_weights.iter().zip(&images) {
        y_hat.axpy(*w, y, 1.0);
    }
    let mut phi = DMatrix::zeros(m, m);
    let mut psi = DMatrix::zeros(belief.dim(), m);
    for ((w, y), x) in set.cov_weights.iter().zip(&images).zip(&set.points) {
        let dy = y - &y_hat;
        let dx = x - belief.mean();
        phi.ger(*w, &dy, &dy, 1.0);
        psi.ger(*w, &dx, &dy, 1.0);
    }
    Ok((y_hat, (&phi + phi.transpose()) * 0.5, psi))
}

/// UKF measurement update of `prior`.
pub fn ukf_update(
    prior: &Gaussian,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    rule: &SigmaPointRule,
) -> Result<(Gaussian, DVector<f64>)> {
    check_measurement(sys, y)?;
    let (y_hat, phi, psi) = sigma_moments(prior, sys, rule)?;
    let s = phi + sys.r();
    let chol = cholesky(&s).ok_or(FilterError::NotPositiveDefinite("innovation covariance"))?;
    let gain = chol.solve(&psi.transpose()).transpose();
    let innovation = y - y_hat;
    let mean = prior.mean() + &gain * &innovation;
    let cov = prior.cov() - &gain * s * gain.transpose();
    Ok((psd_gaussian(mean, &cov)?, innovation))
}

pub fn ukf_step(
    belief: &Gaussian,
    u: &DVector<f64>,
    t: usize,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    rule: &SigmaPointRule,
) -> Result<FilterStep> {
    let prior = predict(belief, u, t, sys, rule)?;
    let (posterior, innovation) = ukf_update(&prior, y, sys, rule)?;
    Ok(FilterStep {
        prior,
        posterior,
        iterations: 1,
        innovation,
        fallback: false,
    })
}

/// Iterated EKF update: relinearizes `g` at the current mean iterate.
pub fn iekf_update(
    prior: &Gaussian,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    max_iter: usize,
    tol: f64,
) -> Result<(Gaussian, DVector<f64>, usize)> {
    check_measurement(sys, y)?;
    if max_iter == 0 {
        return Err(FilterError::Config("iekf max_iter must be at least 1".into()));
    }
    let mut x = prior.mean().clone();
    let mut last = None;
    let mut iterations = 0;
    for _ in 0..max_iter {
        let h = sys.g_jacobian(&x)?;
        let innovation = y - sys.g(&x)?;
        let residual = &innovation - &h * (prior.mean() - &x);
        let (next, cov, _) = joseph_update(prior, &h, &residual, sys.r())?;
        iterations += 1;
        let step = (&next - &x).norm();
        x = next;
        last = Some((cov, innovation));
        if step < tol {
            break;
        }
    }
    let (cov, innovation) = last.expect("at least one iteration");
    Ok((psd_gaussian(x, &cov)?, innovation, iterations))
}

pub fn iekf_step(
    belief: &Gaussian,
    u: &DVector<f64>,
    t: usize,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    max_iter: usize,
    tol: f64,
) -> Result<FilterStep> {
    let prior = ekf_predict(belief, u, t, sys)?;
    let (posterior, innovation, iterations) = iekf_update(&prior, y, sys, max_iter, tol)?;
    Ok(FilterStep {
        prior,
        posterior,
        iterations,
        innovation,
        fallback: false,
    })
}

/// Posterior linearization: statistical linear regression of `g` about the current
/// posterior iterate, followed by a Kalman update of the prior. The first iterate
/// is the prior itself, so one iteration reproduces the UKF update.
pub fn plf_update(
    prior: &Gaussian,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    rule: &SigmaPointRule,
    max_iter: usize,
    tol: f64,
) -> Result<(Gaussian, DVector<f64>, usize)> {
    check_measurement(sys, y)?;
    if max_iter == 0 {
        return Err(FilterError::Config("plf max_iter must be at least 1".into()));
    }
    let mut current = prior.clone();
    let mut innovation = DVector::zeros(y.len());
    let mut iterations = 0;
    for _ in 0..max_iter {
        let (y_hat, phi, psi) = sigma_moments(&current, sys, rule)?;
        // A = Ψᵀ P⁻¹, b = ŷ − A x̂, Ω = Φ − A P Aᵀ
        let a = current.solve_mat(&psi).transpose();
        let b = &y_hat - &a * current.mean();
        let omega = &phi - &a * current.cov() * a.transpose();
        let noise = sys.r() + (&omega + omega.transpose()) * 0.5;
        if cholesky(&noise).is_none() {
            return Err(FilterError::NotPositiveDefinite("regression noise covariance"));
        }
        innovation = y - (&a * prior.mean() + &b);
        let (mean, cov, _) = joseph_update(prior, &a, &innovation, &noise)?;
        let next = psd_gaussian(mean, &cov)?;
        iterations += 1;
        let kl = kl_divergence(&current, &next)?;
        current = next;
        if kl < tol {
            break;
        }
    }
    Ok((current, innovation, iterations))
}

#[allow(clippy::too_many_arguments)]
pub fn plf_step(
    belief: &Gaussian,
    u: &DVector<f64>,
    t: usize,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    rule: &SigmaPointRule,
    max_iter: usize,
    tol: f64,
) -> Result<FilterStep> {
    let prior = predict(belief, u, t, sys, rule)?;
    let (posterior, innovation, iterations) = plf_update(&prior, y, sys, rule, max_iter, tol)?;
    Ok(FilterStep {
        prior,
        posterior,
        iterations,
        innovation,
        fallback: false,
    })
}
