//! Sigma points, the unscented transform, and Gaussian expectation rules.
//!
//! The `2n + 1` sigma points of `N(μ, Σ)` are `μ` and `μ ± col_i(L)`, where `L` is
//! the lower Cholesky factor of `(n + λ)Σ`. Weights:
//!
//! ```text
//! W_m^0 = λ / (n + λ)            W_c^0 = W_m^0 + (1 − α² + β)
//! W_m^i = W_c^i = 1 / (2(n + λ))  i = 1..2n
//! ```
//!
//! Expectations `E[f(z)]`, `z ~ N(μ, Σ)`, go through [`GaussianQuadrature`], which
//! both sigma-point rules and the seeded [`MonteCarlo`] sampler implement.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{FilterError, Result};
use crate::gauss::{cholesky, symmetrize, Gaussian};

/// Spread parameter of a sigma-point rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Fixed(f64),
    /// `λ = 3 − n`, resolved against the dimension of the Gaussian at each use.
    ThreeMinusDim,
}

impl Lambda {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Lambda::Fixed(l) => l,
            Lambda::ThreeMinusDim => 3.0 - n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPointRule {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: Lambda,
}

impl SigmaPointRule {
    pub fn new(alpha: f64, beta: f64, lambda: Lambda) -> Self {
        SigmaPointRule {
            alpha,
            beta,
            lambda,
        }
    }

    /// α = 0, β = 1, λ = 0.
    pub fn julier() -> Self {
        SigmaPointRule::new(0.0, 1.0, Lambda::Fixed(0.0))
    }

    /// α = 1e-3, β = 1, λ = 3 − n.
    pub fn van_der_merwe() -> Self {
        SigmaPointRule::new(1e-3, 1.0, Lambda::ThreeMinusDim)
    }

    /// `n + λ`, checked to be positive.
    pub fn spread(&self, n: usize) -> Result<f64> {
        let spread = n as f64 + self.lambda.resolve(n);
        if spread > 0.0 && spread.is_finite() {
            Ok(spread)
        } else {
            Err(FilterError::InvalidRule { spread })
        }
    }

    /// Mean and covariance weights for dimension `n`.
    pub fn weights(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let spread = self.spread(n)?;
        let lambda = self.lambda.resolve(n);
        let wi = 1.0 / (2.0 * spread);
        let mut wm = vec![wi; 2 * n + 1];
        let mut wc = vec![wi; 2 * n + 1];
        wm[0] = lambda / spread;
        wc[0] = wm[0] + (1.0 - self.alpha * self.alpha + self.beta);
        Ok((wm, wc))
    }
}

/// The `2n + 1` points and their weights.
#[derive(Debug, Clone)]
pub struct SigmaSet {
    pub points: Vec<DVector<f64>>,
    pub mean_weights: Vec<f64>,
    pub cov_weights: Vec<f64>,
}

impl SigmaSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn sigma_points(g: &Gaussian, rule: &SigmaPointRule) -> Result<SigmaSet> {
    let n = g.dim();
    let spread = rule.spread(n)?;
    let (mean_weights, cov_weights) = rule.weights(n)?;
    let scaled = g.cov() * spread;
    let root = cholesky(&scaled)
        .ok_or(FilterError::NotPositiveDefinite("scaled covariance"))?
        .l();
    let mu = g.mean();
    let mut points = Vec::with_capacity(2 * n + 1);
    points.push(mu.clone());
    for i in 0..n {
        points.push(mu + root.column(i));
    }
    for i in 0..n {
        points.push(mu - root.column(i));
    }
    Ok(SigmaSet {
        points,
        mean_weights,
        cov_weights,
    })
}

fn check_finite(v: &DVector<f64>, index: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(FilterError::NonFiniteOutput { index })
    }
}

/// Pushes `g` through `f`; returns the transformed mean and symmetrized covariance.
pub fn unscented_transform<F>(
    g: &Gaussian,
    mut f: F,
    rule: &SigmaPointRule,
) -> Result<(DVector<f64>, DMatrix<f64>)>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let set = sigma_points(g, rule)?;
    let mut images = Vec::with_capacity(set.len());
    for (i, p) in set.points.iter().enumerate() {
        let y = f(p)?;
        check_finite(&y, i)?;
        if let Some(first) = images.first() {
            let first: &DVector<f64> = first;
            if first.len() != y.len() {
                return Err(FilterError::dim("unscented transform output", first.len(), y.len()));
            }
        }
        images.push(y);
    }
    let m = images[0].len();
    let mut mean = DVector::zeros(m);
    for (w, y) in set.mean_weights.iter().zip(&images) {
        mean.axpy(*w, y, 1.0);
    }
    let mut cov = DMatrix::zeros(m, m);
    for (w, y) in set.cov_weights.iter().zip(&images) {
        let d = y - &mean;
        cov.ger(*w, &d, &d, 1.0);
    }
    Ok((mean, symmetrize(&cov)))
}

/// Values that can be averaged by a quadrature rule: scalars, vectors, matrices,
/// and tuples of those.
pub trait Integrand: Sized {
    /// `w · self`, used to seed the running sum.
    fn scaled(&self, w: f64) -> Self;
    /// `self += w · other`.
    fn add_scaled(&mut self, w: f64, other: &Self);
    fn is_finite(&self) -> bool;
}

impl Integrand for f64 {
    fn scaled(&self, w: f64) -> Self {
        w * self
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Integrand for DVector<f64> {
    fn scaled(&self, w: f64) -> Self {
        self * w
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        self.axpy(w, other, 1.0);
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl Integrand for DMatrix<f64> {
    fn scaled(&self, w: f64) -> Self {
        self * w
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += other * w;
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }
}

impl<A: Integrand, B: Integrand> Integrand for (A, B) {
    fn scaled(&self, w: f64) -> Self {
        (self.0.scaled(w), self.1.scaled(w))
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        self.0.add_scaled(w, &other.0);
        self.1.add_scaled(w, &other.1);
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite() && self.1.is_finite()
    }
}

impl<A: Integrand, B: Integrand, C: Integrand> Integrand for (A, B, C) {
    fn scaled(&self, w: f64) -> Self {
        (self.0.scaled(w), self.1.scaled(w), self.2.scaled(w))
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        self.0.add_scaled(w, &other.0);
        self.1.add_scaled(w, &other.1);
        self.2.add_scaled(w, &other.2);
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite() && self.1.is_finite() && self.2.is_finite()
    }
}

/// A weighted point set approximating expectations under a Gaussian.
///
/// Implementations call `visit(weight, point)` once per node; the weights sum to one.
pub trait GaussianQuadrature: Send + Sync {
    fn visit(
        &self,
        g: &Gaussian,
        visit: &mut dyn FnMut(f64, &DVector<f64>) -> Result<()>,
    ) -> Result<()>;
}

impl GaussianQuadrature for SigmaPointRule {
    fn visit(
        &self,
        g: &Gaussian,
        visit: &mut dyn FnMut(f64, &DVector<f64>) -> Result<()>,
    ) -> Result<()> {
        let set = sigma_points(g, self)?;
        for (w, p) in set.mean_weights.iter().zip(&set.points) {
            visit(*w, p)?;
        }
        Ok(())
    }
}

/// Seeded Monte-Carlo sampling; the same seed yields bit-identical estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub n_samples: usize,
    pub seed: u64,
}

impl MonteCarlo {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(FilterError::Config("n_samples must be at least 1".into()));
        }
        Ok(MonteCarlo { n_samples, seed })
    }
}

impl GaussianQuadrature for MonteCarlo {
    fn visit(
        &self,
        g: &Gaussian,
        visit: &mut dyn FnMut(f64, &DVector<f64>) -> Result<()>,
    ) -> Result<()> {
        if self.n_samples == 0 {
            return Err(FilterError::Config("n_samples must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = g.dim();
        let l = g.chol_lower();
        let w = 1.0 / self.n_samples as f64;
        let mut white = DVector::zeros(n);
        let mut z = DVector::zeros(n);
        for _ in 0..self.n_samples {
            for v in white.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            z.copy_from(g.mean());
            z.gemv(1.0, &l, &white, 1.0);
            visit(w, &z)?;
        }
        Ok(())
    }
}

/// Tensor-product Gauss-Hermite quadrature with `points_per_dim` nodes per axis.
///
/// The rule integrates every polynomial of per-coordinate degree below
/// `2 · points_per_dim` exactly, cross moments included; it uses
/// `points_per_dim^n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    points_per_dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Upper bound on the number of tensor-product nodes.
    pub const MAX_NODES: usize = 1_000_000;

    /// Rules are memoized per thread.
    pub fn new(points_per_dim: usize) -> Result<Self> {
        if points_per_dim == 0 {
            return Err(FilterError::Config(
                "gauss-hermite needs at least one point per dimension".into(),
            ));
        }
        thread_local! {
            static RULES: RefCell<HashMap<usize, GaussHermite>> = RefCell::new(HashMap::new());
        }
        let rule = RULES.with(|rules| {
            rules
                .borrow_mut()
                .entry(points_per_dim)
                .or_insert_with(|| Self::build(points_per_dim))
                .clone()
        });
        Ok(rule)
    }

    fn build(p: usize) -> Self {
        // Golub-Welsch: eigenvalues of the Jacobi matrix of the probabilists' Hermite
        // recurrence are the nodes, squared first eigenvector components the weights.
        let jacobi = DMatrix::from_fn(p, p, |i, j| {
            if i.abs_diff(j) == 1 {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..p)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Mirror the nodes so the rule is exactly symmetric.
        for k in 0..p / 2 {
            let x = 0.5 * (pairs[p - 1 - k].0 - pairs[k].0);
            let w = 0.5 * (pairs[p - 1 - k].1 + pairs[k].1);
            pairs[k] = (-x, w);
            pairs[p - 1 - k] = (x, w);
        }
        if p % 2 == 1 {
            pairs[p / 2].0 = 0.0;
        }
        let total: f64 = pairs.iter().map(|q| q.1).sum();
        let (nodes, weights) = pairs.into_iter().map(|(x, w)| (x, w / total)).unzip();
        GaussHermite {
            points_per_dim: p,
            nodes,
            weights,
        }
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    /// Nodes (ascending) and weights of the one-dimensional rule for `N(0, 1)`.
    pub fn nodes_1d(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.weights)
    }
}

impl GaussianQuadrature for GaussHermite {
    fn visit(
        &self,
        g: &Gaussian,
        visit: &mut dyn FnMut(f64, &DVector<f64>) -> Result<()>,
    ) -> Result<()> {
        let n = g.dim();
        let p = self.points_per_dim;
        let total = u32::try_from(n)
            .ok()
            .and_then(|e| p.checked_pow(e))
            .filter(|&t| p > 0 && t <= Self::MAX_NODES)
            .ok_or_else(|| {
                FilterError::Config(format!("{p}^{n} gauss-hermite nodes exceed the node limit"))
            })?;
        let (nodes, weights) = self.nodes_1d();
        let l = g.chol_lower();
        let mean = g.mean().as_slice();
        // offsets[(k·p + i)·n ..] = L[:, k]·nodes[i]
        let mut offsets = vec![0.0; n * p * n];
        for k in 0..n {
            for (i, &x) in nodes.iter().enumerate() {
                let base = (k * p + i) * n;
                for r in k..n {
                    offsets[base + r] = l[(r, k)] * x;
                }
            }
        }
        let mut index = vec![0usize; n];
        let mut z = DVector::zeros(n);
        for _ in 0..total {
            let mut w = 1.0;
            let zs = z.as_mut_slice();
            zs.copy_from_slice(mean);
            for (k, &i) in index.iter().enumerate() {
                w *= weights[i];
                let base = (k * p + i) * n;
                for (zr, o) in zs[k..].iter_mut().zip(&offsets[base + k..base + n]) {
                    *zr += o;
                }
            }
            visit(w, &z)?;
            for slot in index.iter_mut() {
                *slot += 1;
                if *slot < p {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(())
    }
}

/// `Σ_i w_i f(z_i)` over the nodes of `quad`.
pub fn integrate<T, F>(g: &Gaussian, mut f: F, quad: &dyn GaussianQuadrature) -> Result<T>
where
    T: Integrand,
    F: FnMut(&DVector<f64>) -> Result<T>,
{
    let mut acc: Option<T> = None;
    let mut index = 0usize;
    quad.visit(g, &mut |w, z| {
        let v = f(z)?;
        if !v.is_finite() {
            return Err(FilterError::NonFiniteOutput { index });
        }
        match acc.as_mut() {
            Some(a) => a.add_scaled(w, &v),
            None => acc = Some(v.scaled(w)),
        }
        index += 1;
        Ok(())
    })?;
    acc.ok_or(FilterError::Config("quadrature produced no nodes".into()))
}

/// Sigma-point expectation `Σ W_m^i f(χ_i)`; covariance weights are unused.
pub fn expectation<T, F>(g: &Gaussian, f: F, rule: &SigmaPointRule) -> Result<T>
where
    T: Integrand,
    F: FnMut(&DVector<f64>) -> Result<T>,
{
    integrate(g, f, rule)
}

/// Monte-Carlo expectation over `n_samples` seeded draws from `g`.
pub fn mc_expectation<T, F>(g: &Gaussian, f: F, n_samples: usize, seed: u64) -> Result<T>
where
    T: Integrand,
    F: FnMut(&DVector<f64>) -> Result<T>,
{
    integrate(g, f, &MonteCarlo::new(n_samples, seed)?)
}
