use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, StandardNormal};

use crate::error::{FilterError, Result};
use crate::gauss::{cholesky, symmetrize};

/// Noise families used by the benchmark systems.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    Gaussian { cov: DMatrix<f64> },
    /// Independent per-dimension Laplace with variance `cov_ii` (scale `√(cov_ii / 2)`).
    Laplace { cov: DMatrix<f64> },
    /// One scalar `Beta(a, b)` draw copied into every component.
    BetaReplicated { a: f64, b: f64 },
    Mixture { components: Vec<(f64, NoiseModel)> },
}

/// A zero-mean or biased additive noise distribution of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    kind: NoiseKind,
    dim: usize,
    factor: Option<DMatrix<f64>>,
}

fn beta_moments(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}

impl NoiseModel {
    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        let cov = symmetrize(&cov);
        let factor = cholesky(&cov)
            .ok_or(FilterError::NotPositiveDefinite("gaussian noise covariance"))?
            .l();
        Ok(NoiseModel {
            dim: cov.nrows(),
            kind: NoiseKind::Gaussian { cov },
            factor: Some(factor),
        })
    }

    /// Off-diagonal entries must be zero and the diagonal positive.
    pub fn laplace(cov: DMatrix<f64>) -> Result<Self> {
        if !cov.is_square() {
            return Err(FilterError::NotSquare {
                rows: cov.nrows(),
                cols: cov.ncols(),
            });
        }
        let n = cov.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = cov[(i, j)];
                if (i == j && (v.is_nan() || v <= 0.0)) || (i != j && v != 0.0) {
                    return Err(FilterError::Config(
                        "laplace covariance must be diagonal with positive entries".into(),
                    ));
                }
            }
        }
        Ok(NoiseModel {
            dim: n,
            kind: NoiseKind::Laplace { cov },
            factor: None,
        })
    }

    pub fn beta_replicated(a: f64, b: f64, dim: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || dim == 0 {
            return Err(FilterError::Config(format!(
                "beta noise needs a, b > 0 and dim >= 1 (got a={a}, b={b}, dim={dim})"
            )));
        }
        Ok(NoiseModel {
            dim,
            kind: NoiseKind::BetaReplicated { a, b },
            factor: None,
        })
    }

    pub fn mixture(components: Vec<(f64, NoiseModel)>) -> Result<Self> {
        let Some(dim) = components.first().map(|(_, c)| c.dim) else {
            return Err(FilterError::Config("mixture needs at least one component".into()));
        };
        if components.iter().any(|(w, c)| w.is_nan() || *w <= 0.0 || c.dim != dim) {
            return Err(FilterError::Config(
                "mixture weights must be positive and components share a dimension".into(),
            ));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(FilterError::Config(format!("mixture weights sum to {total}")));
        }
        Ok(NoiseModel {
            dim,
            kind: NoiseKind::Mixture { components },
            factor: None,
        })
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> DVector<f64> {
        match &self.kind {
            NoiseKind::Gaussian { .. } | NoiseKind::Laplace { .. } => DVector::zeros(self.dim),
            NoiseKind::BetaReplicated { a, b } => DVector::from_element(self.dim, beta_moments(*a, *b).0),
            NoiseKind::Mixture { components } => components
                .iter()
                .fold(DVector::zeros(self.dim), |acc, (w, c)| acc + c.mean() * *w),
        }
    }

    /// Analytic covariance of the distribution.
    pub fn covariance(&self) -> DMatrix<f64> {
        match &self.kind {
            NoiseKind::Gaussian { cov } | NoiseKind::Laplace { cov } => cov.clone(),
            NoiseKind::BetaReplicated { a, b } => {
                DMatrix::from_element(self.dim, self.dim, beta_moments(*a, *b).1)
            }
            NoiseKind::Mixture { components } => {
                let mean = self.mean();
                components.iter().fold(DMatrix::zeros(self.dim, self.dim), |acc, (w, c)| {
                    let d = c.mean() - &mean;
                    acc + (c.covariance() + &d * d.transpose()) * *w
                })
            }
        }
    }

    /// Covariance handed to the filters: the replicated Beta covariance (rank one)
    /// is replaced by `diag(var_β)`.
    pub fn filter_covariance(&self) -> DMatrix<f64> {
        match &self.kind {
            NoiseKind::BetaReplicated { a, b } => {
                DMatrix::identity(self.dim, self.dim) * beta_moments(*a, *b).1
            }
            _ => self.covariance(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        match &self.kind {
            NoiseKind::Gaussian { .. } => {
                let white = DVector::from_fn(self.dim, |_, _| StandardNormal.sample(rng));
                self.factor.as_ref().expect("gaussian factor") * white
            }
            NoiseKind::Laplace { cov } => DVector::from_fn(self.dim, |i, _| {
                let scale = (cov[(i, i)] / 2.0).sqrt();
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                scale * (e1 - e2)
            }),
            NoiseKind::BetaReplicated { a, b } => {
                let draw = Beta::new(*a, *b).expect("validated beta parameters").sample(rng);
                DVector::from_element(self.dim, draw)
            }
            NoiseKind::Mixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (w, c) in components {
                    acc += w;
                    if u < acc {
                        return c.sample(rng);
                    }
                }
                components.last().expect("non-empty mixture").1.sample(rng)
            }
        }
    }
}
