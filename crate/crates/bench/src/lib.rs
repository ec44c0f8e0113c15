//! Shared fixtures for the criterion benchmarks.

use multiphase_core::{InterferometerSpec, Prior};

/// Prior mean used throughout the benchmarks.
pub const MU: [f64; 2] = [1.1, 2.0];

pub fn dft() -> InterferometerSpec {
    InterferometerSpec::dft()
}

pub fn gaussian(sigma: f64) -> Prior {
    Prior::gaussian(MU, sigma, 0.0).expect("valid prior")
}
