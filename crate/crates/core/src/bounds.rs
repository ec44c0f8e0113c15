//! Lower bounds on the Bayes risk of the phase pair.
//!
//! * Cramér-Rao: `Tr[F⁻¹]/N` at a point.
//! * Van Trees: `Tr[H⁻¹]/N` with `H = ∫A·F dφ + (1/N)·∫∂A∂Aᵀ/A dφ`.
//! * Ziv-Zakai (vector form): for a unit direction `u`,
//!   `Z(u) = ½∫₀^π τ·max_{v: uᵀv=1} ∫[A(φ) + A(φ+vτ)]·Pₑ(φ, φ+vτ) dφ dτ`,
//!   with `Pₑ` the minimum error probability of deciding between the two
//!   phase points from `N` outcomes. The total-variance bound is
//!   `Z(u₁) + Z(u₂)` over an orthonormal pair.
//!
//! With the total-variation form of `Pₑ` the integrand is
//! `Σ_counts min(A(φ)·M(n; p(φ)), A(φ')·M(n; p(φ')))`, which vanishes unless
//! both prior densities are nonzero, so the φ-integral only runs over the
//! overlap of the prior box and its shifted copy.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::{fisher_at, fisher_matrix, InterferometerSpec, OutcomeDistribution};
use crate::linalg::{dot, Mat2, Vec2};
use crate::multinomial::MultinomialTable;
use crate::optimize::maximize_scalar;
use crate::priors::{prior_information_matrix, GaussianPrior, Prior};
use crate::quadrature::{midpoint_grid, Rect};

/// Coarse grid size used to seed the direction search.
pub const COARSE_POINTS: usize = 17;

/// Terms below `peak density · e^{-FLOOR_NATS}` are dropped from the
/// multinomial sums.
const FLOOR_NATS: f64 = 30.0;

/// Which expression is used for the binary-hypothesis error probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorProbabilityForm {
    /// `½(1 − Σ|π₀P₀ − π₁P₁|)`, the minimum error probability.
    #[default]
    TotalVariation,
    /// `½(1 − Σ|π₀P₀ − π₁P₁|²)`, kept for comparison.
    Squared,
}

/// Numerical policy for the Ziv-Zakai integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZZSettings {
    /// Midpoint nodes on `(0, π]`.
    pub tau_points: usize,
    /// Direction parameter `t` is searched on `[−t_range, t_range]`.
    pub t_range: f64,
    pub t_tolerance: f64,
    /// Midpoint nodes per axis for the φ integral.
    pub quad_grid: usize,
    /// Gaussian truncation in prior standard deviations.
    pub support_radius: f64,
    pub error_form: ErrorProbabilityForm,
}

impl Default for ZZSettings {
    fn default() -> Self {
        ZZSettings {
            tau_points: 64,
            t_range: 3.0,
            t_tolerance: 1e-3,
            quad_grid: 60,
            support_radius: 5.0,
            error_form: ErrorProbabilityForm::TotalVariation,
        }
    }
}

impl ZZSettings {
    pub fn validate(&self) -> Result<()> {
        if self.tau_points < 8 || self.quad_grid < 8 {
            return Err(Error::Config(format!(
                "zz tau_points and quad_grid must be >= 8 (got {}, {})",
                self.tau_points, self.quad_grid
            )));
        }
        if !(self.t_range > 0.0 && self.t_tolerance > 0.0 && self.support_radius > 0.0) {
            return Err(Error::Config("zz t_range, t_tolerance and support_radius must be > 0".into()));
        }
        Ok(())
    }

    /// Doubles every resolution parameter.
    pub fn refined(&self) -> Self {
        ZZSettings {
            tau_points: 2 * self.tau_points,
            quad_grid: 2 * self.quad_grid,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanTreesMatrix {
    pub h: Mat2,
}

/// Bound values at one probe count. `None` marks a bound that was not
/// requested or does not exist for the configuration (no Van Trees bound for
/// a rectangular prior; no Cramér-Rao bound where `F` is singular).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub n: usize,
    pub v_crb: Option<f64>,
    pub v_vt: Option<f64>,
    pub v_zz: Option<f64>,
    pub directions: [Vec2; 2],
}

/// `Tr[F⁻¹]/N`.
pub fn crb_total_variance(f: &Mat2, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("probe count must be >= 1".into()));
    }
    Ok(f.inverse()?.trace() / n as f64)
}

/// `∫A(φ)F(φ)dφ` over the ±`radius`σ box by the midpoint rule.
pub fn averaged_fisher(spec: &InterferometerSpec, prior: &GaussianPrior, quad_grid: usize, radius: f64) -> Mat2 {
    let area = Prior::Gaussian(*prior).support_box(radius);
    let (pts, cell) = midpoint_grid(&area, quad_grid);
    let mut acc = Mat2::ZERO;
    for p in pts {
        let a = prior.density(p);
        if a == 0.0 {
            continue;
        }
        acc = acc.add(&fisher_at(spec, p[0], p[1]).scale(a));
    }
    acc.scale(cell)
}

/// Van Trees information matrix for `n` probes.
pub fn van_trees_matrix(spec: &InterferometerSpec, prior: &Prior, n: usize, quad_grid: usize) -> Result<VanTreesMatrix> {
    van_trees_matrix_with(spec, prior, n, quad_grid, ZZSettings::default().support_radius)
}

pub fn van_trees_matrix_with(
    spec: &InterferometerSpec,
    prior: &Prior,
    n: usize,
    quad_grid: usize,
    radius: f64,
) -> Result<VanTreesMatrix> {
    let g = match prior {
        Prior::Gaussian(g) => g,
        Prior::Rect(_) => return Err(Error::NonDerivablePrior),
    };
    van_trees_from_average(&averaged_fisher(spec, g, quad_grid, radius), prior, n)
}

/// Van Trees matrix from a precomputed averaged Fisher matrix.
pub fn van_trees_from_average(mean_fisher: &Mat2, prior: &Prior, n: usize) -> Result<VanTreesMatrix> {
    if n == 0 {
        return Err(Error::Domain("probe count must be >= 1".into()));
    }
    let j = prior_information_matrix(prior)?;
    Ok(VanTreesMatrix {
        h: mean_fisher.add(&j.scale(1.0 / n as f64)),
    })
}

/// `Tr[H⁻¹]/N`.
pub fn van_trees_total_variance(h: &VanTreesMatrix, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("probe count must be >= 1".into()));
    }
    Ok(h.h.inverse()?.trace() / n as f64)
}

/// Minimum error probability of deciding between two outcome distributions
/// from `n` probes with prior odds `π₀ : 1−π₀` (total-variation form).
pub fn min_error_probability(p0: &OutcomeDistribution, p1: &OutcomeDistribution, pi0: f64, n: usize) -> f64 {
    min_error_probability_with(p0, p1, pi0, n, ErrorProbabilityForm::TotalVariation)
}

pub fn min_error_probability_with(
    p0: &OutcomeDistribution,
    p1: &OutcomeDistribution,
    pi0: f64,
    n: usize,
    form: ErrorProbabilityForm,
) -> f64 {
    let table = MultinomialTable::new(n);
    let pi0 = pi0.clamp(0.0, 1.0);
    let pi1 = 1.0 - pi0;
    match form {
        // ½(1 − Σ|a − b|) = Σ min(a, b) when Σ(a + b) = 1
        ErrorProbabilityForm::TotalVariation => {
            table.min_sum(pi0.ln(), &p0.probs(), pi1.ln(), &p1.probs(), -745.0)
        }
        ErrorProbabilityForm::Squared => {
            0.5 * (1.0 - table.squared_difference_sum(pi0, &p0.probs(), pi1, &p1.probs()))
        }
    }
}

/// Eigenvectors of a symmetric 2×2 matrix, descending eigenvalue. Equal
/// eigenvalues give the coordinate axes.
pub fn direction_pair_from(sigma_ref: &Mat2) -> [Vec2; 2] {
    let [l1, l2] = sigma_ref.sym_eigenvalues();
    let scale = sigma_ref.frobenius();
    if (l1 - l2).abs() <= 1e-12 * scale || scale == 0.0 {
        return [[1.0, 0.0], [0.0, 1.0]];
    }
    let (a, d) = (sigma_ref.get(0, 0), sigma_ref.get(1, 1));
    let b = 0.5 * (sigma_ref.get(0, 1) + sigma_ref.get(1, 0));
    // rows of (Σ − λI) are orthogonal to the eigenvector; use the larger one
    let (c1, c2) = ([l1 - d, b], [b, l1 - a]);
    let v = if c1[0].hypot(c1[1]) >= c2[0].hypot(c2[1]) { c1 } else { c2 };
    let norm = v[0].hypot(v[1]);
    let mut u1 = [v[0] / norm, v[1] / norm];
    if u1[0] < 0.0 || (u1[0] == 0.0 && u1[1] < 0.0) {
        u1 = [-u1[0], -u1[1]];
    }
    let mut u2 = [-u1[1], u1[0]];
    if u2[0] < 0.0 || (u2[0] == 0.0 && u2[1] < 0.0) {
        u2 = [-u2[0], -u2[1]];
    }
    [u1, u2]
}

/// Prior-specific pieces of the Ziv-Zakai integrand.
struct ZzIntegrand<'a> {
    spec: &'a InterferometerSpec,
    prior: &'a Prior,
    table: MultinomialTable,
    settings: ZZSettings,
    domain: Rect,
    log_floor: f64,
}

impl<'a> ZzIntegrand<'a> {
    fn new(spec: &'a InterferometerSpec, prior: &'a Prior, n: usize, settings: ZZSettings) -> Self {
        let domain = prior.support_box(settings.support_radius);
        let peak = crate::priors::density(prior, prior.mu());
        ZzIntegrand {
            spec,
            prior,
            table: MultinomialTable::new(n),
            settings,
            domain,
            log_floor: peak.ln() - FLOOR_NATS,
        }
    }

    #[inline]
    fn ln_density(&self, p: Vec2) -> f64 {
        match self.prior {
            Prior::Gaussian(g) => g.ln_density(p),
            Prior::Rect(r) => {
                if r.support().contains(p) {
                    -2.0 * r.delta().ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `∫[A(φ) + A(φ+s)]·Pₑ(φ, φ+s) dφ` for the shift `s = vτ`.
    fn shift_integral(&self, shift: Vec2) -> f64 {
        match self.settings.error_form {
            ErrorProbabilityForm::TotalVariation => {
                let Some(area) = self.domain.intersect(&self.domain.shifted([-shift[0], -shift[1]])) else {
                    return 0.0;
                };
                self.overlap_integral(&area, shift)
            }
            ErrorProbabilityForm::Squared => {
                // the squared form does not vanish off the overlap: integrate
                // over the union by inclusion-exclusion
                let shifted = self.domain.shifted([-shift[0], -shift[1]]);
                let mut total = self.squared_over(&self.domain, shift) + self.squared_over(&shifted, shift);
                if let Some(both) = self.domain.intersect(&shifted) {
                    total -= self.squared_over(&both, shift);
                }
                total
            }
        }
    }

    /// L1-form integrand over `area`, using the tensor structure of the
    /// midpoint grid so phase factors are evaluated once per row and column.
    fn overlap_integral(&self, area: &Rect, shift: Vec2) -> f64 {
        let n = self.settings.quad_grid;
        let hx = (area.x1 - area.x0) / n as f64;
        let hy = (area.y1 - area.y0) / n as f64;
        let phasor = |t: f64| {
            let (s, c) = t.sin_cos();
            Complex64::new(c, s)
        };
        let ys: Vec<f64> = (0..n).map(|j| area.y0 + (j as f64 + 0.5) * hy).collect();
        let col: Vec<(Complex64, Complex64)> = ys.iter().map(|&y| (phasor(y), phasor(y + shift[1]))).collect();
        let mut acc = 0.0;
        for i in 0..n {
            let x = area.x0 + (i as f64 + 0.5) * hx;
            let qx = x + shift[0];
            let (ex, eqx) = (phasor(x), phasor(qx));
            for (&y, &(ey, eqy)) in ys.iter().zip(&col) {
                let qy = y + shift[1];
                let (la, lb) = (self.ln_density([x, y]), self.ln_density([qx, qy]));
                if la == f64::NEG_INFINITY || lb == f64::NEG_INFINITY {
                    continue;
                }
                let p0 = self.spec.probs_from_phasors(ex, ey);
                let p1 = self.spec.probs_from_phasors(eqx, eqy);
                acc += self.table.min_sum(la, &p0, lb, &p1, self.log_floor);
            }
        }
        acc * hx * hy
    }

    fn squared_over(&self, area: &Rect, shift: Vec2) -> f64 {
        let (pts, cell) = midpoint_grid(area, self.settings.quad_grid);
        let mut acc = 0.0;
        for p in pts {
            let q = [p[0] + shift[0], p[1] + shift[1]];
            let a = self.ln_density(p).exp();
            let b = self.ln_density(q).exp();
            if a + b == 0.0 {
                continue;
            }
            let p0 = self.spec.probs_at(p[0], p[1]);
            let p1 = self.spec.probs_at(q[0], q[1]);
            let s = self.table.squared_difference_sum(a / (a + b), &p0, b / (a + b), &p1);
            acc += (a + b) * 0.5 * (1.0 - s);
        }
        acc * cell
    }

    /// `max_t ∫…dφ` along `v(t) = u + t·u⊥` at separation `τ`.
    fn max_over_directions(&self, u: Vec2, tau: f64) -> f64 {
        let perp = [-u[1], u[0]];
        let objective = |t: f64| {
            let v = [u[0] + t * perp[0], u[1] + t * perp[1]];
            self.shift_integral([v[0] * tau, v[1] * tau])
        };
        let r = self.settings.t_range;
        maximize_scalar(objective, -r, r, COARSE_POINTS, self.settings.t_tolerance).1
    }
}

/// Scalar Ziv-Zakai bound `Z(u)` on `uᵀΣu`.
pub fn zz_directional(spec: &InterferometerSpec, prior: &Prior, n: usize, u: Vec2, settings: &ZZSettings) -> Result<f64> {
    settings.validate()?;
    if n == 0 {
        return Err(Error::Domain("probe count must be >= 1".into()));
    }
    if (dot(u, u).sqrt() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("direction {u:?} is not a unit vector")));
    }
    let integrand = ZzIntegrand::new(spec, prior, n, *settings);
    let m = settings.tau_points;
    let h = std::f64::consts::PI / m as f64;
    // τ nodes are independent; collecting in index order keeps the reduction
    // order fixed for any thread count
    let values: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|k| {
            let tau = (k as f64 + 0.5) * h;
            tau * integrand.max_over_directions(u, tau)
        })
        .collect();
    Ok(0.5 * h * values.iter().sum::<f64>())
}

/// Reference covariance used to pick the Ziv-Zakai directions before any
/// data exist: `H⁻¹` for a Gaussian prior, the prior covariance otherwise.
pub fn default_reference(spec: &InterferometerSpec, prior: &Prior, n: usize, settings: &ZZSettings) -> Result<Mat2> {
    match prior {
        Prior::Gaussian(_) => {
            let h = van_trees_matrix_with(spec, prior, n.max(1), settings.quad_grid, settings.support_radius)?;
            h.h.inverse()
        }
        Prior::Rect(_) => Ok(prior.covariance()),
    }
}

/// `V_ZZ = Z(u₁) + Z(u₂)`.
pub fn zz_total_variance(
    spec: &InterferometerSpec,
    prior: &Prior,
    n: usize,
    settings: &ZZSettings,
    directions: Option<[Vec2; 2]>,
) -> Result<BoundRecord> {
    let directions = match directions {
        Some(d) => {
            let ok = d.iter().all(|v| (dot(*v, *v) - 1.0).abs() < 1e-10) && dot(d[0], d[1]).abs() < 1e-10;
            if !ok {
                return Err(Error::Domain("supplied directions are not orthonormal".into()));
            }
            d
        }
        None => direction_pair_from(&default_reference(spec, prior, n, settings)?),
    };
    let v = zz_directional(spec, prior, n, directions[0], settings)?
        + zz_directional(spec, prior, n, directions[1], settings)?;
    Ok(BoundRecord {
        n,
        v_crb: None,
        v_vt: None,
        v_zz: Some(v),
        directions,
    })
}

/// Which bounds to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundToggles {
    pub crb: bool,
    pub vt: bool,
    pub zz: bool,
}

impl Default for BoundToggles {
    fn default() -> Self {
        BoundToggles {
            crb: true,
            vt: true,
            zz: true,
        }
    }
}

/// Evaluates the requested bounds over a probe-count schedule. The averaged
/// Fisher matrix is computed once and shared across `n`.
///
/// The Cramér-Rao value is taken at the prior mean and is `None` where the
/// Fisher matrix there is singular.
pub fn bounds_over_schedule(
    spec: &InterferometerSpec,
    prior: &Prior,
    schedule: &[usize],
    toggles: BoundToggles,
    settings: &ZZSettings,
) -> Result<Vec<BoundRecord>> {
    if toggles.vt && !prior.is_derivable() {
        return Err(Error::NonDerivablePrior);
    }
    settings.validate()?;
    let mean_fisher = match prior {
        Prior::Gaussian(g) => Some(averaged_fisher(spec, g, settings.quad_grid, settings.support_radius)),
        Prior::Rect(_) => None,
    };
    let f_mu = fisher_matrix(spec, prior.mu().into());
    schedule
        .iter()
        .map(|&n| {
            let h = mean_fisher
                .as_ref()
                .map(|mf| van_trees_from_average(mf, prior, n))
                .transpose()?;
            let v_crb = if toggles.crb { crb_total_variance(&f_mu, n).ok() } else { None };
            let v_vt = match (&h, toggles.vt) {
                (Some(h), true) => Some(van_trees_total_variance(h, n)?),
                _ => None,
            };
            let reference = match &h {
                Some(h) => h.h.inverse()?,
                None => prior.covariance(),
            };
            let directions = direction_pair_from(&reference);
            let v_zz = if toggles.zz {
                zz_total_variance(spec, prior, n, settings, Some(directions))?.v_zz
            } else {
                None
            };
            Ok(BoundRecord {
                n,
                v_crb,
                v_vt,
                v_zz,
                directions,
            })
        })
        .collect()
}
