//! Gaussian beliefs and the small amount of dense linear algebra the filters need.
//!
//! Every covariance handled by the filters passes through [`Gaussian::new`], which
//! symmetrizes the matrix and keeps its lower Cholesky factor around. Inverses are
//! realized as Cholesky solves except where the inverse itself is the stored result
//! (covariance <-> precision conversion).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{FilterError, Result};

/// Largest jitter tried by default when restoring positive definiteness.
pub const DEFAULT_JITTER_MAX: f64 = 1e-6;

/// Default relative step for [`fd_jacobian`].
pub const FD_JACOBIAN_STEP: f64 = 1e-6;

/// Default relative step for [`fd_hessian`].
pub const FD_HESSIAN_STEP: f64 = 1e-4;

/// Cholesky factorization that also rejects non-finite input and zero pivots.
pub fn cholesky(m: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    if (0..l.nrows()).all(|i| l[(i, i)] > 0.0 && l[(i, i)].is_finite()) {
        Some(chol)
    } else {
        None
    }
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Result of [`symmetrize_psd`]: the repaired matrix and the jitter that was added.
#[derive(Debug, Clone, PartialEq)]
pub struct Jittered {
    pub matrix: DMatrix<f64>,
    pub jitter: f64,
}

/// Symmetrizes `m` and, if it fails a Cholesky factorization, adds the smallest
/// `ε·I` from the ladder `1e-12, 1e-10, …, jitter_max` that makes it factorizable.
pub fn symmetrize_psd(m: &DMatrix<f64>, jitter_max: f64) -> Result<Jittered> {
    if !m.is_square() {
        return Err(FilterError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let sym = symmetrize(m);
    if cholesky(&sym).is_some() {
        return Ok(Jittered {
            matrix: sym,
            jitter: 0.0,
        });
    }
    let n = sym.nrows();
    let mut ladder = Vec::new();
    let mut eps = 1e-12;
    while eps < jitter_max {
        ladder.push(eps);
        eps *= 100.0;
    }
    ladder.push(jitter_max);
    for eps in ladder {
        let candidate = &sym + DMatrix::identity(n, n) * eps;
        if cholesky(&candidate).is_some() {
            return Ok(Jittered {
                matrix: candidate,
                jitter: eps,
            });
        }
    }
    Err(FilterError::JitterExhausted { jitter_max })
}

/// A multivariate normal belief `N(mean, cov)` with a validated covariance.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl Gaussian {
    /// Builds a Gaussian, symmetrizing `cov`. Fails unless `cov` is strictly positive
    /// definite.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(FilterError::NotSquare {
                rows: cov.nrows(),
                cols: cov.ncols(),
            });
        }
        if cov.nrows() != mean.len() {
            return Err(FilterError::dim("gaussian covariance", mean.len(), cov.nrows()));
        }
        if let Some(i) = mean.iter().position(|v| !v.is_finite()) {
            return Err(FilterError::NonFiniteOutput { index: i });
        }
        let cov = symmetrize(&cov);
        let chol = cholesky(&cov).ok_or(FilterError::NotPositiveDefinite("covariance"))?;
        Ok(Gaussian { mean, cov, chol })
    }

    /// Scalar convenience constructor `N(mean, var)`.
    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Gaussian::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    /// Builds the Gaussian with the given mean and covariance `precision⁻¹`.
    pub fn from_precision(mean: DVector<f64>, precision: &Precision) -> Result<Self> {
        Gaussian::new(mean, precision.to_covariance())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower-triangular `L` with `L Lᵀ = cov`.
    pub fn chol_lower(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `ln det cov` from the Cholesky diagonal.
    pub fn log_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        2.0 * (0..self.dim()).map(|i| l[(i, i)].ln()).sum::<f64>()
    }

    /// `cov⁻¹ b` via the stored factorization.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `cov⁻¹ B` via the stored factorization.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `cov⁻¹` as a validated precision matrix.
    pub fn precision(&self) -> Result<Precision> {
        Precision::new(self.chol.inverse())
    }

    /// Log-density at `x`.
    pub fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        let d = x - &self.mean;
        let w = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&d)
            .expect("cholesky factor has a positive diagonal");
        let n = self.dim() as f64;
        -0.5 * (w.norm_squared() + self.log_det() + n * (2.0 * std::f64::consts::PI).ln())
    }
}

impl PartialEq for Gaussian {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.cov == other.cov
    }
}

/// A symmetric positive-definite inverse covariance.
#[derive(Debug, Clone)]
pub struct Precision {
    mat: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl Precision {
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        let mat = symmetrize(&mat);
        let chol = cholesky(&mat).ok_or(FilterError::NotPositiveDefinite("precision"))?;
        Ok(Precision { mat, chol })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// `mat⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn to_covariance(&self) -> DMatrix<f64> {
        symmetrize(&self.chol.inverse())
    }
}

/// `KL(p ‖ q)` between two Gaussians of equal dimension.
pub fn kl_divergence(p: &Gaussian, q: &Gaussian) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(FilterError::dim("kl divergence", p.dim(), q.dim()));
    }
    let n = p.dim() as f64;
    let lq = q.chol.l_dirty();
    // tr(Σq⁻¹ Σp) = ‖Lq⁻¹ Lp‖_F²
    let whitened = lq
        .solve_lower_triangular(&p.chol.l())
        .ok_or(FilterError::NotPositiveDefinite("covariance"))?;
    let trace = whitened.norm_squared();
    let diff = q.mean() - p.mean();
    let maha = lq
        .solve_lower_triangular(&diff)
        .ok_or(FilterError::NotPositiveDefinite("covariance"))?
        .norm_squared();
    let kl = 0.5 * (trace + maha - n + q.log_det() - p.log_det());
    Ok(kl.max(0.0))
}

fn step_sizes(x: &DVector<f64>, h: Option<f64>, rel: f64) -> Vec<f64> {
    x.iter()
        .map(|xj| h.unwrap_or(rel * xj.abs().max(1.0)))
        .collect()
}

fn finite_vec(v: DVector<f64>, coordinate: usize) -> Result<DVector<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(FilterError::NonFinite { coordinate })
    }
}

/// Central-difference Jacobian of `f` at `x`.
///
/// With `h = None` the step for coordinate `j` is `1e-6·max(1, |x_j|)`.
pub fn fd_jacobian<F>(mut f: F, x: &DVector<f64>, h: Option<f64>) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let steps = step_sizes(x, h, FD_JACOBIAN_STEP);
    let mut columns = Vec::with_capacity(x.len());
    for (j, &hj) in steps.iter().enumerate() {
        let mut plus = x.clone();
        plus[j] += hj;
        let mut minus = x.clone();
        minus[j] -= hj;
        let fp = finite_vec(f(&plus)?, j)?;
        let fm = finite_vec(f(&minus)?, j)?;
        if fp.len() != fm.len() {
            return Err(FilterError::dim("fd_jacobian output", fp.len(), fm.len()));
        }
        columns.push((fp - fm) / (2.0 * hj));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, x.len(), |i, j| columns[j][i]))
}

/// Second-order central-difference Hessian of a scalar `f` at `x`, symmetrized.
///
/// With `h = None` the step for coordinate `j` is `1e-4·max(1, |x_j|)`.
pub fn fd_hessian<F>(mut f: F, x: &DVector<f64>, h: Option<f64>) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    let n = x.len();
    let steps = step_sizes(x, h, FD_HESSIAN_STEP);
    let mut eval = |z: &DVector<f64>, coordinate: usize| -> Result<f64> {
        let v = f(z)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FilterError::NonFinite { coordinate })
        }
    };
    let f0 = eval(x, 0)?;
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let hi = steps[i];
        let mut p = x.clone();
        p[i] += hi;
        let mut m = x.clone();
        m[i] -= hi;
        hess[(i, i)] = (eval(&p, i)? - 2.0 * f0 + eval(&m, i)?) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let shifted = |si: f64, sj: f64| {
                let mut z = x.clone();
                z[i] += si * hi;
                z[j] += sj * hj;
                z
            };
            let pp = eval(&shifted(1.0, 1.0), i)?;
            let pm = eval(&shifted(1.0, -1.0), i)?;
            let mp = eval(&shifted(-1.0, 1.0), j)?;
            let mm = eval(&shifted(-1.0, -1.0), j)?;
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    Ok(symmetrize(&hess))
}
