//! Gaussian filtering for nonlinear state-space models.
//!
//! The crate provides a derivative-free natural-gradient Gaussian approximation
//! filter ([`nano`]), the EKF, UKF, IEKF and PLF baselines ([`baseline`]), the
//! Gaussian and unscented-transform utilities they share, and the benchmark
//! systems used to compare them ([`models`]).

pub mod baseline;
pub mod error;
pub mod filter;
pub mod gauss;
pub mod models;
pub mod nano;
pub mod unscented;

pub use baseline::FilterStep;
pub use error::{FilterError, Result};
pub use filter::FilterKind;
pub use gauss::{kl_divergence, Gaussian, Precision};
pub use nano::{NanoConfig, StopCriterion, UpdateIntegrator};
pub use unscented::{unscented_transform, GaussHermite, Lambda, MonteCarlo, SigmaPointRule};
