//! Forward model of the three-mode interferometer.
//!
//! A single photon enters `input_port`, passes the input tritter `U_A`, picks
//! up the two unknown phases on the outer arms (the central arm is the
//! reference) and is recombined by `U_B` before detection on one of three
//! output modes. Everything downstream only needs the outcome probabilities
//! `p(x|φ)` and their phase gradients, which are provided here.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// Number of interferometer modes (and detector outcomes).
pub const MODES: usize = 3;

/// Probabilities below this are dropped from the Fisher sum.
pub const FISHER_EPS: f64 = 1e-12;

const UNITARITY_TOL: f64 = 1e-10;

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle difference into `(-π, π]`.
#[inline]
pub fn wrap_signed(x: f64) -> f64 {
    let w = wrap_angle(x);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// The two unknown relative phases, stored wrapped into `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePair {
    phi1: f64,
    phi2: f64,
}

impl PhasePair {
    pub fn new(phi1: f64, phi2: f64) -> Self {
        PhasePair {
            phi1: wrap_angle(phi1),
            phi2: wrap_angle(phi2),
        }
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.phi1, self.phi2]
    }
}

impl From<[f64; 2]> for PhasePair {
    fn from(v: [f64; 2]) -> Self {
        PhasePair::new(v[0], v[1])
    }
}

/// A 3×3 unitary matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryMatrix3 {
    entries: [[Complex64; 3]; 3],
}

impl UnitaryMatrix3 {
    /// Validates unitarity (max |U†U − I| entry within 1e-10).
    pub fn new(entries: [[Complex64; 3]; 3]) -> Result<Self> {
        let m = UnitaryMatrix3 { entries };
        let dev = m.unitarity_deviation();
        if !(dev <= UNITARITY_TOL) {
            return Err(Error::NotUnitary(dev));
        }
        Ok(m)
    }

    fn new_unchecked(entries: [[Complex64; 3]; 3]) -> Self {
        UnitaryMatrix3 { entries }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self::new_unchecked([[one, zero, zero], [zero, one, zero], [zero, zero, one]])
    }

    pub fn entries(&self) -> &[[Complex64; 3]; 3] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    pub fn mul(&self, rhs: &UnitaryMatrix3) -> UnitaryMatrix3 {
        let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.entries[i][k] * rhs.entries[k][j]).sum();
            }
        }
        Self::new_unchecked(out)
    }

    pub fn adjoint(&self) -> UnitaryMatrix3 {
        let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.entries[j][i].conj();
            }
        }
        Self::new_unchecked(out)
    }

    /// Max absolute entry of U†U − I.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.adjoint().mul(self);
        let mut dev = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                let d = (prod.entries[i][j] - Complex64::new(target, 0.0)).norm();
                dev = if d.is_nan() { f64::NAN } else { dev.max(d) };
            }
        }
        dev
    }
}

/// Balanced tritter: the 3-mode discrete Fourier transform,
/// `F_jk = ω^{jk}/√3` with `ω = exp(2πi/3)`.
pub fn dft_tritter() -> UnitaryMatrix3 {
    let s = 1.0 / 3f64.sqrt();
    let mut e = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (j, row) in e.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            let angle = TAU * ((j * k) % 3) as f64 / 3.0;
            *cell = Complex64::from_polar(s, angle);
        }
    }
    UnitaryMatrix3::new_unchecked(e)
}

/// `diag(e^{iφ₁}, 1, e^{iφ₂})`: outer arms carry the phases, the central arm
/// is the reference.
pub fn phase_screen(phi: PhasePair) -> UnitaryMatrix3 {
    let zero = Complex64::new(0.0, 0.0);
    UnitaryMatrix3::new_unchecked([
        [Complex64::from_polar(1.0, phi.phi1()), zero, zero],
        [zero, Complex64::new(1.0, 0.0), zero],
        [zero, zero, Complex64::from_polar(1.0, phi.phi2())],
    ])
}

/// Probabilities of the three detector outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    p: [f64; 3],
}

impl OutcomeDistribution {
    pub fn new(p: [f64; 3]) -> Result<Self> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("not a probability vector: {p:?}")));
        }
        Ok(OutcomeDistribution { p })
    }

    pub fn probs(&self) -> [f64; 3] {
        self.p
    }

    #[inline]
    pub fn get(&self, x: usize) -> f64 {
        self.p[x]
    }
}

/// Draws one detector outcome.
pub fn sample_outcome<R: Rng + ?Sized>(dist: &OutcomeDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (x, &p) in dist.p.iter().enumerate() {
        acc += p;
        if u < acc {
            return x;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    dist.p.iter().rposition(|&p| p > 0.0).unwrap_or(MODES - 1)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawSpec {
    u_a: [[[f64; 2]; 3]; 3],
    u_b: [[[f64; 2]; 3]; 3],
    input_port: usize,
}

fn to_raw(u: &UnitaryMatrix3) -> [[[f64; 2]; 3]; 3] {
    let mut out = [[[0.0; 2]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = [u.entries[i][j].re, u.entries[i][j].im];
        }
    }
    out
}

fn from_raw(raw: &[[[f64; 2]; 3]; 3], name: &str) -> Result<UnitaryMatrix3> {
    let mut e = [[Complex64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = Complex64::new(raw[i][j][0], raw[i][j][1]);
        }
    }
    UnitaryMatrix3::new(e).map_err(|err| Error::Config(format!("{name}: {err}")))
}

/// Interferometer: input/output unitaries and the illuminated input port.
///
/// The amplitude on output `x` is `a_x = Σ_k c_{xk} d_k` with
/// `c_{xk} = U_B[x][k]·U_A[k][port]` and `d = (e^{iφ₁}, 1, e^{iφ₂})`;
/// the coefficients are cached on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct InterferometerSpec {
    u_a: UnitaryMatrix3,
    u_b: UnitaryMatrix3,
    input_port: usize,
    coeff: [[Complex64; 3]; 3],
}

impl TryFrom<RawSpec> for InterferometerSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let u_a = from_raw(&raw.u_a, "u_a")?;
        let u_b = from_raw(&raw.u_b, "u_b")?;
        InterferometerSpec::new(u_a, u_b, raw.input_port)
    }
}

impl From<InterferometerSpec> for RawSpec {
    fn from(spec: InterferometerSpec) -> Self {
        RawSpec {
            u_a: to_raw(&spec.u_a),
            u_b: to_raw(&spec.u_b),
            input_port: spec.input_port,
        }
    }
}

impl Default for InterferometerSpec {
    fn default() -> Self {
        Self::dft()
    }
}

impl InterferometerSpec {
    pub fn new(u_a: UnitaryMatrix3, u_b: UnitaryMatrix3, input_port: usize) -> Result<Self> {
        if input_port >= MODES {
            return Err(Error::Config(format!("input_port {input_port} not in 0..3")));
        }
        for (name, u) in [("u_a", &u_a), ("u_b", &u_b)] {
            let dev = u.unitarity_deviation();
            if !(dev <= UNITARITY_TOL) {
                return Err(Error::Config(format!("{name}: {}", Error::NotUnitary(dev))));
            }
        }
        let mut coeff = [[Complex64::new(0.0, 0.0); 3]; 3];
        for (x, row) in coeff.iter_mut().enumerate() {
            for (k, c) in row.iter_mut().enumerate() {
                *c = u_b.get(x, k) * u_a.get(k, input_port);
            }
        }
        Ok(InterferometerSpec {
            u_a,
            u_b,
            input_port,
            coeff,
        })
    }

    /// Two DFT tritters, photon in port 0.
    pub fn dft() -> Self {
        Self::new(dft_tritter(), dft_tritter(), 0).expect("DFT tritter is unitary")
    }

    pub fn u_a(&self) -> &UnitaryMatrix3 {
        &self.u_a
    }

    pub fn u_b(&self) -> &UnitaryMatrix3 {
        &self.u_b
    }

    pub fn input_port(&self) -> usize {
        self.input_port
    }

    /// Parses the unitary file format (see `docs/unitary-format.md`).
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    #[inline]
    fn amplitudes(&self, e1: Complex64, e2: Complex64) -> [Complex64; 3] {
        let c = &self.coeff;
        [
            c[0][0] * e1 + c[0][1] + c[0][2] * e2,
            c[1][0] * e1 + c[1][1] + c[1][2] * e2,
            c[2][0] * e1 + c[2][1] + c[2][2] * e2,
        ]
    }

    /// Outcome probabilities as a raw array, without validation. Hot path for
    /// the particle filter and the bound integrals.
    #[inline]
    pub fn probs_at(&self, phi1: f64, phi2: f64) -> [f64; 3] {
        let (s1, c1) = phi1.sin_cos();
        let (s2, c2) = phi2.sin_cos();
        let a = self.amplitudes(Complex64::new(c1, s1), Complex64::new(c2, s2));
        [a[0].norm_sqr(), a[1].norm_sqr(), a[2].norm_sqr()]
    }

    /// Outcome probabilities from the phase factors `e^{iφ₁}`, `e^{iφ₂}`.
    #[inline]
    pub fn probs_from_phasors(&self, e1: Complex64, e2: Complex64) -> [f64; 3] {
        let a = self.amplitudes(e1, e2);
        [a[0].norm_sqr(), a[1].norm_sqr(), a[2].norm_sqr()]
    }

    /// Probabilities and their gradients `∂p_x/∂φ_j` (indexed `[x][j]`).
    pub fn probs_and_gradient(&self, phi1: f64, phi2: f64) -> ([f64; 3], [[f64; 2]; 3]) {
        let (s1, c1) = phi1.sin_cos();
        let (s2, c2) = phi2.sin_cos();
        let e1 = Complex64::new(c1, s1);
        let e2 = Complex64::new(c2, s2);
        let a = self.amplitudes(e1, e2);
        let i = Complex64::new(0.0, 1.0);
        let mut p = [0.0; 3];
        let mut grad = [[0.0; 2]; 3];
        for x in 0..3 {
            p[x] = a[x].norm_sqr();
            let da1 = i * self.coeff[x][0] * e1;
            let da2 = i * self.coeff[x][2] * e2;
            grad[x][0] = 2.0 * (a[x].conj() * da1).re;
            grad[x][1] = 2.0 * (a[x].conj() * da2).re;
        }
        (p, grad)
    }

    /// Full matrix product `U_B · phase_screen(φ) · U_A`.
    pub fn transfer_matrix(&self, phi: PhasePair) -> UnitaryMatrix3 {
        self.u_b.mul(&phase_screen(phi)).mul(&self.u_a)
    }
}

/// `p_x = |(U_B · phase_screen(φ) · U_A)_{x, port}|²`.
pub fn likelihood(spec: &InterferometerSpec, phi: PhasePair) -> OutcomeDistribution {
    let mut p = spec.probs_at(phi.phi1(), phi.phi2());
    // absorb rounding so the distribution is normalized to 1e-12
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    OutcomeDistribution { p }
}

/// Fisher information matrix from analytic gradients; outcomes with
/// probability below [`FISHER_EPS`] are skipped.
pub fn fisher_matrix(spec: &InterferometerSpec, phi: PhasePair) -> Mat2 {
    fisher_at(spec, phi.phi1(), phi.phi2())
}

pub(crate) fn fisher_at(spec: &InterferometerSpec, phi1: f64, phi2: f64) -> Mat2 {
    let (p, grad) = spec.probs_and_gradient(phi1, phi2);
    let mut f = Mat2::ZERO;
    for x in 0..3 {
        if p[x] < FISHER_EPS {
            continue;
        }
        let g = grad[x];
        f.0[0][0] += g[0] * g[0] / p[x];
        f.0[0][1] += g[0] * g[1] / p[x];
        f.0[1][1] += g[1] * g[1] / p[x];
    }
    f.0[1][0] = f.0[0][1];
    f
}

/// `ν = −F₁₂/√(F₁₁F₂₂)`, the correlation coefficient of `F⁻¹`.
pub fn fisher_correlation(f: &Mat2) -> Result<f64> {
    let (f11, f22) = (f.get(0, 0), f.get(1, 1));
    if !(f11 > 0.0 && f22 > 0.0) {
        return Err(Error::Domain(format!(
            "uninformative phase point: Fisher diagonal ({f11:e}, {f22:e})"
        )));
    }
    Ok(-f.get(0, 1) / (f11 * f22).sqrt())
}
