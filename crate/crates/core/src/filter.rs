//! A single handle over every filter so callers can run them interchangeably.

use std::fmt;

use nalgebra::DVector;

use crate::baseline::{
    ekf_step, iekf_step, plf_step, ukf_step, FilterStep, DEFAULT_IEKF_TOL, DEFAULT_MAX_ITER,
    DEFAULT_PLF_TOL,
};
use crate::error::Result;
use crate::gauss::Gaussian;
use crate::models::DynamicalSystem;
use crate::nano::{nano_step, NanoConfig};
use crate::unscented::SigmaPointRule;

#[derive(Debug, Clone, PartialEq)]
pub enum FilterKind {
    Ekf,
    Ukf { rule: SigmaPointRule },
    Iekf { max_iter: usize, tol: f64 },
    Plf { rule: SigmaPointRule, max_iter: usize, tol: f64 },
    Nano(NanoConfig),
}

impl FilterKind {
    pub const NAMES: [&'static str; 5] = ["ekf", "ukf", "iekf", "plf", "nano"];

    /// The filter with its default settings, looked up by name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().as_str() {
            "ekf" => FilterKind::Ekf,
            "ukf" => FilterKind::Ukf {
                rule: SigmaPointRule::van_der_merwe(),
            },
            "iekf" => FilterKind::Iekf {
                max_iter: DEFAULT_MAX_ITER,
                tol: DEFAULT_IEKF_TOL,
            },
            "plf" => FilterKind::Plf {
                rule: SigmaPointRule::van_der_merwe(),
                max_iter: DEFAULT_MAX_ITER,
                tol: DEFAULT_PLF_TOL,
            },
            "nano" => FilterKind::Nano(NanoConfig::default()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Ekf => "ekf",
            FilterKind::Ukf { .. } => "ukf",
            FilterKind::Iekf { .. } => "iekf",
            FilterKind::Plf { .. } => "plf",
            FilterKind::Nano(_) => "nano",
        }
    }

    /// Predicts with input `u_t` and updates with `y_{t+1}`.
    pub fn step(
        &self,
        belief: &Gaussian,
        u: &DVector<f64>,
        t: usize,
        y: &DVector<f64>,
        sys: &DynamicalSystem,
    ) -> Result<FilterStep> {
        match self {
            FilterKind::Ekf => ekf_step(belief, u, t, y, sys),
            FilterKind::Ukf { rule } => ukf_step(belief, u, t, y, sys, rule),
            FilterKind::Iekf { max_iter, tol } => iekf_step(belief, u, t, y, sys, *max_iter, *tol),
            FilterKind::Plf { rule, max_iter, tol } => {
                plf_step(belief, u, t, y, sys, rule, *max_iter, *tol)
            }
            FilterKind::Nano(cfg) => nano_step(belief, u, t, y, sys, cfg),
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
