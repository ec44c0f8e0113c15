//! Fixed-size 2×2 real matrix helpers.
//!
//! Everything in this crate works with two parameters, so covariance,
//! Fisher and Van Trees matrices are all `Mat2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[0.0; 2]; 2]);
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn symmetric(a11: f64, a12: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a12, a22]])
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Mat2([[a11, 0.0], [0.0, a22]])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Inverse; fails when the determinant is negligible relative to the
    /// squared scale of the entries.
    pub fn inverse(&self) -> Result<Mat2> {
        let det = self.det();
        let scale = self.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !det.is_finite() || det.abs() <= 1e-14 * scale * scale || scale == 0.0 {
            return Err(Error::SingularInformation { det });
        }
        let [[a, b], [c, d]] = self.0;
        Ok(Mat2([[d / det, -b / det], [-c / det, a / det]]))
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let [[a, b], [c, d]] = self.0;
        Mat2([[a * s, b * s], [c * s, d * s]])
    }

    pub fn add(&self, other: &Mat2) -> Mat2 {
        let mut out = *self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += other.0[i][j];
            }
        }
        out
    }

    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn quad_form(&self, v: Vec2) -> f64 {
        let w = self.mul_vec(v);
        v[0] * w[0] + v[1] * w[1]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut m = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }

    /// Eigenvalues of the symmetric part, descending.
    pub fn sym_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0];
        let d = self.0[1][1];
        let b = 0.5 * (self.0[0][1] + self.0[1][0]);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean + r, mean - r]
    }

    /// Lower Cholesky factor of a symmetric positive definite matrix.
    pub fn cholesky(&self) -> Result<Mat2> {
        let a = self.0[0][0];
        if a <= 0.0 {
            return Err(Error::Domain(format!("cholesky: non-positive pivot {a:e}")));
        }
        let l11 = a.sqrt();
        let l21 = self.0[1][0] / l11;
        let rem = self.0[1][1] - l21 * l21;
        if rem <= 0.0 {
            return Err(Error::Domain(format!("cholesky: non-positive pivot {rem:e}")));
        }
        Ok(Mat2([[l11, 0.0], [l21, rem.sqrt()]]))
    }
}

pub fn outer(u: Vec2, v: Vec2) -> Mat2 {
    Mat2([[u[0] * v[0], u[0] * v[1]], [u[1] * v[0], u[1] * v[1]]])
}

pub fn dot(u: Vec2, v: Vec2) -> f64 {
    u[0] * v[0] + u[1] * v[1]
}

pub fn norm(v: Vec2) -> f64 {
    dot(v, v).sqrt()
}
