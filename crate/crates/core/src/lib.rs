//! Bayesian estimation of two phases in a three-mode interferometer.
//!
//! The crate simulates single-photon probes through a pair of tritters,
//! tracks the posterior with a particle filter, and evaluates the
//! Cramér-Rao, Van Trees and Ziv-Zakai lower bounds on the total variance
//! `Tr Σ` in the few-probe regime. [`experiments`] ties these together into
//! seeded Monte Carlo studies.

pub mod bounds;
pub mod error;
pub mod experiments;
pub mod interferometer;
pub mod linalg;
pub mod multinomial;
pub mod optimize;
pub mod particle;
pub mod priors;
pub mod quadrature;

pub use bounds::{BoundRecord, BoundToggles, ErrorProbabilityForm, VanTreesMatrix, ZZSettings};
pub use error::{Error, Result};
pub use interferometer::{InterferometerSpec, OutcomeDistribution, PhasePair, UnitaryMatrix3};
pub use linalg::{Mat2, Vec2};
pub use particle::{ParticleSet, PosteriorSummary, ResampleParams};
pub use priors::{GaussianPrior, Prior, PriorConfig, PriorFamily, RectPrior};

/// Version string embedded in exported manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
