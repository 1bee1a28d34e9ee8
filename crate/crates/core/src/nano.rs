//! Natural-gradient Gaussian approximation filter (derivative-free form).
//!
//! Prediction is a moment-matching unscented transform through the transition
//! model. The update minimizes the expected negative log-likelihood plus the KL
//! divergence to the prior over Gaussian posteriors by natural-gradient descent.
//! With `L(z) = ½(y − g(z))ᵀ Λ (y − g(z))`, each iteration takes expectations under
//! the current iterate `N(x̂ₖ, Pₖ)`:
//!
//! ```text
//! V   = E[L(z)]
//! Vₓ  = E[(z − x̂ₖ) L(z)]
//! Vₓₓ = E[(z − x̂ₖ)(z − x̂ₖ)ᵀ L(z)]
//! ```
//!
//! and by Stein's lemma `E[∇L] = Sₖ Vₓ` and `E[∇²L] = Sₖ Vₓₓ Sₖ − V Sₖ`, with
//! `Sₖ = Pₖ⁻¹`. The step is
//!
//! ```text
//! Sₖ₊₁ = P⁻⁻¹ + α (Sₖ Vₓₓ Sₖ − V Sₖ)
//! x̂ₖ₊₁ = x̂ₖ − α Sₖ₊₁⁻¹ (Sₖ Vₓ + P⁻⁻¹ (x̂ₖ − x̂⁻))
//! ```
//!
//! so no derivatives of `g` are needed inside the loop.

use nalgebra::{DMatrix, DVector};

use crate::baseline::FilterStep;
use crate::error::{FilterError, Result};
use crate::gauss::{
    cholesky, kl_divergence, symmetrize, symmetrize_psd, Gaussian, Precision, DEFAULT_JITTER_MAX,
};
use crate::models::DynamicalSystem;
use crate::unscented::{
    unscented_transform, GaussHermite, GaussianQuadrature, MonteCarlo, SigmaPointRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopCriterion {
    /// Frobenius norm of the covariance change.
    CovNorm,
    /// `KL(N(x̂ₖ, Pₖ) ‖ N(x̂ₖ₊₁, Pₖ₊₁))`.
    GaussianKl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Start the iteration at the prior.
    Prior,
    /// EKF mean with the Laplace (Gauss-Newton plus curvature) precision.
    LaplaceEkf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualWeighting {
    /// `Λ = I`.
    Identity,
    /// `Λ = R⁻¹`, the measurement negative log-likelihood.
    InverseR,
}

/// Quadrature used for the expected coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateIntegrator {
    /// Sigma points of [`NanoConfig::update_rule`].
    SigmaPoints,
    /// Tensor-product Gauss-Hermite rule; exact for the curvature of quadratic losses
    /// when `points_per_dim ≥ 3`.
    GaussHermite { points_per_dim: usize },
    MonteCarlo { n_samples: usize, seed: u64 },
}

/// What an iteration does when the precision update is not positive definite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndefinitePolicy {
    /// Report divergence.
    Diverge,
    /// Replace `S' = S + G` by `S + G + ½ G S⁻¹ G`, which is positive definite for any
    /// symmetric `G` and has the same fixed points.
    Retract,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NanoConfig {
    /// Natural-gradient step size α in (0, 1].
    pub step_size: f64,
    pub stop_criterion: StopCriterion,
    /// Threshold γ of the stopping criterion.
    pub stop_threshold: f64,
    pub max_update_iters: usize,
    pub predict_rule: SigmaPointRule,
    pub update_rule: SigmaPointRule,
    pub init_strategy: InitStrategy,
    pub residual_weighting: ResidualWeighting,
    pub integrator: UpdateIntegrator,
    pub jitter_max: f64,
    /// Times α is halved within one iteration while the precision update is not
    /// positive definite before `on_indefinite` applies.
    pub max_backtracks: usize,
    pub on_indefinite: IndefinitePolicy,
}

impl Default for NanoConfig {
    fn default() -> Self {
        NanoConfig {
            step_size: 1.0,
            stop_criterion: StopCriterion::GaussianKl,
            stop_threshold: 1e-8,
            max_update_iters: 10,
            predict_rule: SigmaPointRule::van_der_merwe(),
            update_rule: SigmaPointRule::julier(),
            init_strategy: InitStrategy::LaplaceEkf,
            residual_weighting: ResidualWeighting::InverseR,
            integrator: UpdateIntegrator::GaussHermite { points_per_dim: 4 },
            jitter_max: DEFAULT_JITTER_MAX,
            max_backtracks: 0,
            on_indefinite: IndefinitePolicy::Diverge,
        }
    }
}

impl NanoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(FilterError::Config(format!(
                "step size must lie in (0, 1], got {}",
                self.step_size
            )));
        }
        if self.stop_threshold.is_nan() || self.stop_threshold <= 0.0 {
            return Err(FilterError::Config(format!(
                "stop threshold must be positive, got {}",
                self.stop_threshold
            )));
        }
        if self.max_update_iters == 0 {
            return Err(FilterError::Config("max_update_iters must be at least 1".into()));
        }
        match self.integrator {
            UpdateIntegrator::MonteCarlo { n_samples: 0, .. } => {
                return Err(FilterError::Config("monte-carlo integrator needs samples".into()))
            }
            UpdateIntegrator::GaussHermite { points_per_dim: 0 } => {
                return Err(FilterError::Config("gauss-hermite integrator needs points".into()))
            }
            _ => {}
        }
        Ok(())
    }

    /// The quadrature selected by [`NanoConfig::integrator`].
    pub fn quadrature(&self) -> Result<Box<dyn GaussianQuadrature>> {
        Ok(match self.integrator {
            UpdateIntegrator::SigmaPoints => Box::new(self.update_rule),
            UpdateIntegrator::GaussHermite { points_per_dim } => {
                Box::new(GaussHermite::new(points_per_dim)?)
            }
            UpdateIntegrator::MonteCarlo { n_samples, seed } => {
                Box::new(MonteCarlo::new(n_samples, seed)?)
            }
        })
    }
}

/// `(V, Vₓ, Vₓₓ)` at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedCoefficients {
    pub v: f64,
    pub v_x: DVector<f64>,
    pub v_xx: DMatrix<f64>,
}

/// One point of the update iteration.
#[derive(Debug, Clone)]
pub struct UpdateIterate {
    pub belief: Gaussian,
    pub precision: Precision,
    pub k: usize,
    /// Coefficients evaluated at the previous iterate that produced this one.
    pub coefficients: Option<ExpectedCoefficients>,
    /// Jitter added to this iterate's precision (0 when none was needed).
    pub jitter: f64,
    /// Step size that produced this iterate after any halving.
    pub step_size: f64,
}

impl UpdateIterate {
    pub fn initial(belief: Gaussian) -> Result<Self> {
        let precision = belief.precision()?;
        Ok(UpdateIterate {
            belief,
            precision,
            k: 0,
            coefficients: None,
            jitter: 0.0,
            step_size: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Threshold,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct UpdateReport {
    pub posterior: Gaussian,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub final_kl: f64,
    pub jitter_events: usize,
    /// Iterations whose step size was halved.
    pub backtracked_iters: usize,
    /// The Laplace initializer dropped its curvature term.
    pub init_fallback: bool,
}

/// Moment-matching prediction `N(E[f(x, u)], Cov[f(x, u)] + Q)` by the unscented
/// transform.
pub fn predict(
    posterior: &Gaussian,
    u: &DVector<f64>,
    t: usize,
    sys: &DynamicalSystem,
    rule: &SigmaPointRule,
) -> Result<Gaussian> {
    if posterior.dim() != sys.state_dim() {
        return Err(FilterError::dim("predict belief", sys.state_dim(), posterior.dim()));
    }
    let (mean, w) = unscented_transform(posterior, |x| sys.f(x, u, t), rule)?;
    let fixed = symmetrize_psd(&(w + sys.q()), DEFAULT_JITTER_MAX)?;
    Gaussian::new(mean, fixed.matrix)
}

/// Measurement loss `L(z) = ½(y − g(z))ᵀ Λ (y − g(z))` and its Stein forms.
#[derive(Debug, Clone)]
pub struct MeasurementLoss<'a> {
    y: DVector<f64>,
    weight: DMatrix<f64>,
    sys: &'a DynamicalSystem,
}

pub fn loss_functions<'a>(
    y: &DVector<f64>,
    sys: &'a DynamicalSystem,
    weighting: ResidualWeighting,
) -> Result<MeasurementLoss<'a>> {
    if y.len() != sys.measurement_dim() {
        return Err(FilterError::dim("measurement", sys.measurement_dim(), y.len()));
    }
    let m = y.len();
    let weight = match weighting {
        ResidualWeighting::Identity => DMatrix::identity(m, m),
        ResidualWeighting::InverseR => sys.r_inv().clone(),
    };
    Ok(MeasurementLoss {
        y: y.clone(),
        weight,
        sys,
    })
}

impl MeasurementLoss<'_> {
    pub fn weight(&self) -> &DMatrix<f64> {
        &self.weight
    }

    /// `L(z)`.
    pub fn value(&self, z: &DVector<f64>) -> Result<f64> {
        let mut scratch = DVector::zeros(self.y.len());
        self.value_with(z, &mut scratch)
    }

    /// [`Self::value`] using `scratch` for the residual.
    fn value_with(&self, z: &DVector<f64>, scratch: &mut DVector<f64>) -> Result<f64> {
        self.sys.g_into(z, scratch)?;
        let m = scratch.len();
        let r = scratch.as_mut_slice();
        for (ri, yi) in r.iter_mut().zip(self.y.as_slice()) {
            *ri -= yi;
        }
        let r = &*r;
        let total: f64 = self
            .weight
            .as_slice()
            .chunks_exact(m)
            .zip(r)
            .map(|(col, rj)| rj * col.iter().zip(r).map(|(w, ri)| w * ri).sum::<f64>())
            .sum();
        Ok(0.5 * total)
    }

    /// `L_x(z) = (z − x_ref)·L(z)`.
    pub fn first_moment(&self, z: &DVector<f64>, x_ref: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((z - x_ref) * self.value(z)?)
    }

    /// `L_xx(z) = (z − x_ref)(z − x_ref)ᵀ·L(z)`.
    pub fn second_moment(&self, z: &DVector<f64>, x_ref: &DVector<f64>) -> Result<DMatrix<f64>> {
        let d = z - x_ref;
        Ok(&d * d.transpose() * self.value(z)?)
    }

    /// `(V, Vₓ, Vₓₓ)` under `belief`, centred at its mean, from one evaluation of
    /// `g` per quadrature node.
    pub fn expected_coefficients(
        &self,
        belief: &Gaussian,
        quadrature: &dyn GaussianQuadrature,
    ) -> Result<ExpectedCoefficients> {
        let n = belief.dim();
        let x_ref = belief.mean();
        let mut v = 0.0;
        let mut v_x = DVector::zeros(n);
        let mut v_xx = DMatrix::zeros(n, n);
        let mut d = vec![0.0; n];
        let mut scratch = DVector::zeros(self.y.len());
        let mut index = 0;
        quadrature.visit(belief, &mut |w, z| {
            let l = self.value_with(z, &mut scratch)?;
            if !l.is_finite() {
                return Err(FilterError::NonFiniteOutput { index });
            }
            for ((di, zi), xi) in d.iter_mut().zip(z.as_slice()).zip(x_ref.as_slice()) {
                *di = zi - xi;
            }
            let wl = w * l;
            v += wl;
            let vx = v_x.as_mut_slice();
            for (j, col) in v_xx.as_mut_slice().chunks_exact_mut(n).enumerate() {
                let a = wl * d[j];
                vx[j] += a;
                for (c, di) in col[j..].iter_mut().zip(&d[j..]) {
                    *c += a * di;
                }
            }
            index += 1;
            Ok(())
        })?;
        if index == 0 {
            return Err(FilterError::Config("quadrature produced no nodes".into()));
        }
        v_xx.fill_upper_triangle_with_lower_triangle();
        Ok(ExpectedCoefficients { v, v_x, v_xx })
    }
}

/// Initial posterior for the update iteration; see [`InitStrategy`].
#[derive(Debug, Clone)]
pub struct InitResult {
    pub belief: Gaussian,
    /// The curvature term made the precision indefinite and was dropped.
    pub gauss_newton_fallback: bool,
}

pub fn init_update(
    prior: &Gaussian,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    strategy: InitStrategy,
) -> Result<InitResult> {
    if y.len() != sys.measurement_dim() {
        return Err(FilterError::dim("measurement", sys.measurement_dim(), y.len()));
    }
    match strategy {
        InitStrategy::Prior => Ok(InitResult {
            belief: prior.clone(),
            gauss_newton_fallback: false,
        }),
        InitStrategy::LaplaceEkf => {
            let x = prior.mean();
            let jac = sys.g_jacobian(x)?;
            let residual = y - sys.g(x)?;
            let p = prior.cov();
            let s = &jac * p * jac.transpose() + sys.r();
            let chol =
                cholesky(&s).ok_or(FilterError::NotPositiveDefinite("innovation covariance"))?;
            let gain = chol.solve(&(&jac * p)).transpose();
            let mean = x + gain * &residual;

            let gauss_newton =
                prior.precision()?.matrix() + jac.transpose() * sys.r_inv() * &jac;
            let weighted = sys.r_inv() * &residual;
            let hessians = sys.g_hessians(x)?;
            let mut curvature = DMatrix::zeros(prior.dim(), prior.dim());
            for (w, h) in weighted.iter().zip(&hessians) {
                curvature += h * *w;
            }
            let full = symmetrize(&(&gauss_newton - curvature));
            let (precision, gauss_newton_fallback) = match Precision::new(full) {
                Ok(p) => (p, false),
                Err(_) => (Precision::new(gauss_newton)?, true),
            };
            Ok(InitResult {
                belief: Gaussian::from_precision(mean, &precision)?,
                gauss_newton_fallback,
            })
        }
    }
}

fn diverged(it: &UpdateIterate, reason: impl ToString) -> FilterError {
    FilterError::Divergence {
        iteration: it.k,
        reason: reason.to_string(),
        last_valid: Box::new(it.belief.clone()),
    }
}

/// One natural-gradient step from `it` toward the optimal Gaussian posterior.
///
/// `prior_precision` must be `prior.cov()⁻¹`. The step size is taken from `cfg`
/// unvalidated, so `α = 0` is allowed here and returns the prior precision.
pub fn update_iteration(
    it: &UpdateIterate,
    prior: &Gaussian,
    prior_precision: &Precision,
    loss: &MeasurementLoss<'_>,
    cfg: &NanoConfig,
    integrator: &dyn GaussianQuadrature,
) -> Result<UpdateIterate> {
    let x_ref = it.belief.mean();
    let coefficients = loss
        .expected_coefficients(&it.belief, integrator)
        .map_err(|e| diverged(it, e))?;
    let ExpectedCoefficients { v, v_x, v_xx } = &coefficients;
    let s = it.precision.matrix();
    let hessian = s * v_xx * s - s * *v;
    let mut alpha = cfg.step_size;
    let mut backtracks = 0;
    let fixed = loop {
        let next = prior_precision.matrix() + &hessian * alpha;
        match symmetrize_psd(&next, cfg.jitter_max) {
            Ok(fixed) => break fixed,
            Err(e) if backtracks >= cfg.max_backtracks => match cfg.on_indefinite {
                IndefinitePolicy::Diverge => return Err(diverged(it, e)),
                IndefinitePolicy::Retract => {
                    let g = &next - s;
                    let retracted = s + &g + &g * it.belief.cov() * &g * 0.5;
                    break symmetrize_psd(&retracted, cfg.jitter_max).map_err(|e| diverged(it, e))?;
                }
            },
            Err(_) => {
                alpha *= 0.5;
                backtracks += 1;
            }
        }
    };
    let precision = Precision::new(fixed.matrix).map_err(|e| diverged(it, e))?;
    let gradient = s * v_x + prior_precision.matrix() * (x_ref - prior.mean());
    let mean = x_ref - precision.solve(&gradient) * alpha;
    let belief = Gaussian::new(mean, precision.to_covariance()).map_err(|e| diverged(it, e))?;
    Ok(UpdateIterate {
        belief,
        precision,
        k: it.k + 1,
        coefficients: Some(coefficients),
        jitter: fixed.jitter,
        step_size: alpha,
    })
}

pub fn stopping_met(prev: &Gaussian, next: &Gaussian, cfg: &NanoConfig) -> bool {
    match cfg.stop_criterion {
        StopCriterion::CovNorm => (next.cov() - prev.cov()).norm() < cfg.stop_threshold,
        StopCriterion::GaussianKl => {
            kl_divergence(prev, next).is_ok_and(|kl| kl < cfg.stop_threshold)
        }
    }
}

/// Runs the update iteration from [`init_update`] until the stopping rule holds or
/// `max_update_iters` is reached.
pub fn update(
    prior: &Gaussian,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    cfg: &NanoConfig,
) -> Result<UpdateReport> {
    cfg.validate()?;
    if prior.dim() != sys.state_dim() {
        return Err(FilterError::dim("prior", sys.state_dim(), prior.dim()));
    }
    let init = init_update(prior, y, sys, cfg.init_strategy)?;
    let prior_precision = prior.precision()?;
    let loss = loss_functions(y, sys, cfg.residual_weighting)?;
    let quadrature = cfg.quadrature()?;
    let mut it = UpdateIterate::initial(init.belief)?;
    let mut stop_reason = StopReason::MaxIters;
    let mut final_kl = f64::NAN;
    let mut jitter_events = 0;
    let mut backtracked_iters = 0;
    for _ in 0..cfg.max_update_iters {
        let next = update_iteration(&it, prior, &prior_precision, &loss, cfg, quadrature.as_ref())?;
        if next.jitter > 0.0 {
            jitter_events += 1;
        }
        if next.step_size < cfg.step_size {
            backtracked_iters += 1;
        }
        let kl = kl_divergence(&it.belief, &next.belief);
        final_kl = kl.as_ref().copied().unwrap_or(f64::NAN);
        let met = match cfg.stop_criterion {
            StopCriterion::GaussianKl => kl.is_ok_and(|kl| kl < cfg.stop_threshold),
            StopCriterion::CovNorm => stopping_met(&it.belief, &next.belief, cfg),
        };
        it = next;
        if met {
            stop_reason = StopReason::Threshold;
            break;
        }
    }
    Ok(UpdateReport {
        posterior: it.belief,
        iterations: it.k,
        stop_reason,
        final_kl,
        jitter_events,
        backtracked_iters,
        init_fallback: init.gauss_newton_fallback,
    })
}

/// Predict with `cfg.predict_rule`, then update. A diverging update falls back to
/// the initializer belief and sets [`FilterStep::fallback`].
pub fn nano_step(
    belief: &Gaussian,
    u: &DVector<f64>,
    t: usize,
    y: &DVector<f64>,
    sys: &DynamicalSystem,
    cfg: &NanoConfig,
) -> Result<FilterStep> {
    let prior = predict(belief, u, t, sys, &cfg.predict_rule)?;
    let (posterior, iterations, fallback) = match update(&prior, y, sys, cfg) {
        Ok(report) => (report.posterior, report.iterations, false),
        Err(FilterError::Divergence { iteration, .. }) => {
            let init = init_update(&prior, y, sys, cfg.init_strategy)?;
            (init.belief, iteration.max(1), true)
        }
        Err(e) => return Err(e),
    };
    let innovation = y - sys.g(posterior.mean())?;
    Ok(FilterStep {
        prior,
        posterior,
        iterations,
        innovation,
        fallback,
    })
}
