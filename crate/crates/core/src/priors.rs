//! Prior distributions over the phase pair.
//!
//! Priors live on the plane; periodicity only enters through the likelihood.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::quadrature::{self, Rect};

/// `σ²·[[1, ρ], [ρ, 1]]`.
pub fn gamma_from(sigma: f64, rho: f64) -> Result<Mat2> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!(
            "|rho| must be < 1 (singular covariance), got {rho}"
        )));
    }
    let s2 = sigma * sigma;
    Ok(Mat2::symmetric(s2, s2 * rho, s2))
}

/// Pearson coefficient `Γ₁₂/√(Γ₁₁Γ₂₂)`.
pub fn pearson(gamma: &Mat2) -> Result<f64> {
    let (a, d) = (gamma.get(0, 0), gamma.get(1, 1));
    if !(a > 0.0 && d > 0.0) {
        return Err(Error::Domain(format!("non-positive diagonal ({a}, {d})")));
    }
    Ok(gamma.get(0, 1) / (a * d).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior {
    mu: Vec2,
    gamma: Mat2,
    gamma_inv: Mat2,
    chol: Mat2,
    norm: f64,
}

impl GaussianPrior {
    pub fn new(mu: Vec2, gamma: Mat2) -> Result<Self> {
        if !gamma.is_symmetric(1e-14 * gamma.frobenius()) {
            return Err(Error::Domain("covariance must be symmetric".into()));
        }
        if !(gamma.sym_eigenvalues()[1] > 0.0) {
            return Err(Error::Domain("covariance must be positive definite".into()));
        }
        let gamma_inv = gamma.inverse()?;
        let chol = gamma.cholesky()?;
        Ok(GaussianPrior {
            mu,
            gamma,
            gamma_inv,
            chol,
            norm: 1.0 / (TAU * gamma.det().sqrt()),
        })
    }

    pub fn from_sigma_rho(mu: Vec2, sigma: f64, rho: f64) -> Result<Self> {
        Self::new(mu, gamma_from(sigma, rho)?)
    }

    pub fn mu(&self) -> Vec2 {
        self.mu
    }

    pub fn gamma(&self) -> &Mat2 {
        &self.gamma
    }

    pub fn gamma_inv(&self) -> &Mat2 {
        &self.gamma_inv
    }

    #[inline]
    pub fn density(&self, phi: Vec2) -> f64 {
        let d = [phi[0] - self.mu[0], phi[1] - self.mu[1]];
        self.norm * (-0.5 * self.gamma_inv.quad_form(d)).exp()
    }

    /// Log of [`Self::density`].
    #[inline]
    pub fn ln_density(&self, phi: Vec2) -> f64 {
        let d = [phi[0] - self.mu[0], phi[1] - self.mu[1]];
        self.norm.ln() - 0.5 * self.gamma_inv.quad_form(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPrior {
    mu: Vec2,
    delta: f64,
}

impl RectPrior {
    pub fn new(mu: Vec2, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        Ok(RectPrior { mu, delta })
    }

    pub fn mu(&self) -> Vec2 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn support(&self) -> Rect {
        Rect::centered(self.mu, 0.5 * self.delta, 0.5 * self.delta)
    }

    #[inline]
    pub fn density(&self, phi: Vec2) -> f64 {
        if self.support().contains(phi) {
            1.0 / (self.delta * self.delta)
        } else {
            0.0
        }
    }
}

/// A-priori distribution over `(φ₁, φ₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    Gaussian(GaussianPrior),
    Rect(RectPrior),
}

impl Prior {
    pub fn gaussian(mu: Vec2, sigma: f64, rho: f64) -> Result<Self> {
        Ok(Prior::Gaussian(GaussianPrior::from_sigma_rho(mu, sigma, rho)?))
    }

    pub fn rect(mu: Vec2, delta: f64) -> Result<Self> {
        Ok(Prior::Rect(RectPrior::new(mu, delta)?))
    }

    pub fn mu(&self) -> Vec2 {
        match self {
            Prior::Gaussian(g) => g.mu,
            Prior::Rect(r) => r.mu,
        }
    }

    pub fn covariance(&self) -> Mat2 {
        match self {
            Prior::Gaussian(g) => g.gamma,
            Prior::Rect(r) => {
                let v = r.delta * r.delta / 12.0;
                Mat2::diag(v, v)
            }
        }
    }

    /// Box that holds the prior mass: `±radius` standard deviations per axis
    /// for a Gaussian, the exact support for a rectangle.
    pub fn support_box(&self, radius: f64) -> Rect {
        match self {
            Prior::Gaussian(g) => Rect::centered(
                g.mu,
                radius * g.gamma.get(0, 0).sqrt(),
                radius * g.gamma.get(1, 1).sqrt(),
            ),
            Prior::Rect(r) => r.support(),
        }
    }

    pub fn is_derivable(&self) -> bool {
        matches!(self, Prior::Gaussian(_))
    }
}

/// Normalized prior density.
#[inline]
pub fn density(prior: &Prior, phi: Vec2) -> f64 {
    match prior {
        Prior::Gaussian(g) => g.density(phi),
        Prior::Rect(r) => r.density(phi),
    }
}

/// One draw from the prior (on the plane, not wrapped).
pub fn sample<R: Rng + ?Sized>(prior: &Prior, rng: &mut R) -> Vec2 {
    match prior {
        Prior::Gaussian(g) => {
            let z: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let d = g.chol.mul_vec(z);
            [g.mu[0] + d[0], g.mu[1] + d[1]]
        }
        Prior::Rect(r) => {
            let h = 0.5 * r.delta;
            [
                r.mu[0] + rng.gen_range(-h..h),
                r.mu[1] + rng.gen_range(-h..h),
            ]
        }
    }
}

/// `∫ ∂ᵢA ∂ⱼA / A dφ`, which is `Γ⁻¹` for a Gaussian.
pub fn prior_information_matrix(prior: &Prior) -> Result<Mat2> {
    match prior {
        Prior::Gaussian(g) => Ok(g.gamma_inv),
        Prior::Rect(_) => Err(Error::NonDerivablePrior),
    }
}

/// Same integral by adaptive quadrature of the score outer product over a
/// ±`radius`σ box; validation mode for [`prior_information_matrix`].
pub fn prior_information_quadrature(prior: &Prior, radius: f64, tol: f64) -> Result<Mat2> {
    let g = match prior {
        Prior::Gaussian(g) => g,
        Prior::Rect(_) => return Err(Error::NonDerivablePrior),
    };
    let area = prior.support_box(radius);
    let entry = |i: usize, j: usize| {
        quadrature::adaptive_simpson_2d(
            |x, y| {
                let a = g.density([x, y]);
                // ∂A = −A·Γ⁻¹(φ − μ), so ∂ᵢA∂ⱼA/A = A·sᵢsⱼ
                let s = g.gamma_inv.mul_vec([x - g.mu[0], y - g.mu[1]]);
                a * s[i] * s[j]
            },
            &area,
            tol,
        )
    };
    let (h11, h12, h22) = (entry(0, 0), entry(0, 1), entry(1, 1));
    Ok(Mat2::symmetric(h11, h12, h22))
}

/// Prior block of the run-config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub family: PriorFamily,
    pub mu: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorFamily {
    Gaussian,
    Rect,
}

impl PriorConfig {
    pub fn gaussian(mu: Vec2, sigma: f64, rho: f64) -> Self {
        PriorConfig {
            family: PriorFamily::Gaussian,
            mu,
            sigma: Some(sigma),
            rho: Some(rho),
            delta: None,
        }
    }

    pub fn rect(mu: Vec2, delta: f64) -> Self {
        PriorConfig {
            family: PriorFamily::Rect,
            mu,
            sigma: None,
            rho: None,
            delta: Some(delta),
        }
    }

    pub fn build(&self) -> Result<Prior> {
        match self.family {
            PriorFamily::Gaussian => {
                if self.delta.is_some() {
                    return Err(Error::Config("gaussian prior does not take `delta`".into()));
                }
                let sigma = self
                    .sigma
                    .ok_or_else(|| Error::Config("gaussian prior requires `sigma`".into()))?;
                Prior::gaussian(self.mu, sigma, self.rho.unwrap_or(0.0))
                    .map_err(|e| Error::Config(e.to_string()))
            }
            PriorFamily::Rect => {
                if self.sigma.is_some() || self.rho.is_some() {
                    return Err(Error::Config("rect prior takes only `mu` and `delta`".into()));
                }
                let delta = self
                    .delta
                    .ok_or_else(|| Error::Config("rect prior requires `delta`".into()))?;
                Prior::rect(self.mu, delta).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const MU: Vec2 = [1.1, 2.0];

    #[test]
    fn gamma_from_examples() {
        let g = gamma_from(0.25, 0.0).unwrap();
        assert_eq!(g, Mat2::diag(0.0625, 0.0625));
        let g = gamma_from(0.2, 0.4).unwrap();
        assert!((g.get(0, 1) - 0.016).abs() < 1e-15);
        assert!(gamma_from(0.2, 1.0).is_err());
        assert!(gamma_from(0.2, -1.5).is_err());
        assert!(gamma_from(0.0, 0.1).is_err());
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&Mat2::diag(1.0, 4.0)).unwrap(), 0.0);
        assert!((pearson(&Mat2::symmetric(3.0, 3.0, 3.0)).unwrap() - 1.0).abs() < 1e-15);
        let r = pearson(&gamma_from(0.3, -0.25).unwrap()).unwrap();
        assert!((r + 0.25).abs() < 1e-15);
        assert!(pearson(&Mat2::diag(0.0, 1.0)).is_err());
    }

    #[test]
    fn density_examples() {
        let g = Prior::gaussian(MU, 0.25, 0.3).unwrap();
        let det = g.covariance().det();
        assert!((density(&g, MU) - 1.0 / (TAU * det.sqrt())).abs() < 1e-12);
        let r = Prior::rect(MU, 0.4).unwrap();
        assert!((density(&r, MU) - 1.0 / 0.16).abs() < 1e-12);
        assert_eq!(density(&r, [MU[0] + 0.4, MU[1]]), 0.0);
    }

    #[test]
    fn densities_integrate_to_one() {
        for prior in [
            Prior::gaussian(MU, 0.25, 0.0).unwrap(),
            Prior::gaussian(MU, 0.2, 0.4).unwrap(),
            Prior::gaussian(MU, 0.4, -0.25).unwrap(),
        ] {
            let area = prior.support_box(6.0);
            let mass = quadrature::adaptive_simpson_2d(|x, y| density(&prior, [x, y]), &area, 1e-9);
            assert!((mass - 1.0).abs() < 1e-6, "{mass}");
        }
        let r = Prior::rect(MU, 0.6).unwrap();
        let mass = quadrature::midpoint_2d(|p| density(&r, p), &r.support_box(0.0), 50);
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rect_samples_stay_in_support() {
        let r = Prior::rect(MU, 0.4).unwrap();
        let sup = r.support_box(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            assert!(sup.contains(sample(&r, &mut rng)));
        }
    }

    #[test]
    fn gaussian_sample_mean_clt() {
        let g = Prior::gaussian(MU, 0.25, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let s = sample(&g, &mut rng);
            sum[0] += s[0];
            sum[1] += s[1];
        }
        for j in 0..2 {
            let mean = sum[j] / n as f64;
            assert!((mean - MU[j]).abs() < 4.0 * 0.25 / (n as f64).sqrt());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = Prior::gaussian(MU, 0.25, 0.4).unwrap();
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            (0..20).map(|_| sample(&g, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn information_matrix() {
        let g = Prior::gaussian(MU, 0.25, 0.0).unwrap();
        let h = prior_information_matrix(&g).unwrap();
        assert!(h.max_abs_diff(&Mat2::diag(16.0, 16.0)) < 1e-12);

        let g = Prior::gaussian(MU, 0.2, 0.4).unwrap();
        let h = prior_information_matrix(&g).unwrap();
        let q = prior_information_quadrature(&g, 8.0, 1e-6).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let rel = (h.get(i, j) - q.get(i, j)).abs() / h.get(i, j).abs();
                assert!(rel < 1e-3, "({i},{j}): {} vs {}", h.get(i, j), q.get(i, j));
            }
        }
        assert!(matches!(
            prior_information_matrix(&Prior::rect(MU, 0.6).unwrap()),
            Err(Error::NonDerivablePrior)
        ));
    }

    #[test]
    fn config_block() {
        let cfg: PriorConfig =
            toml::from_str("family = \"gaussian\"\nmu = [1.1, 2.0]\nsigma = 0.25\nrho = 0.4").unwrap();
        assert!(matches!(cfg.build().unwrap(), Prior::Gaussian(_)));
        let cfg: PriorConfig = toml::from_str("family = \"rect\"\nmu = [1.1, 2.0]\ndelta = 0.6").unwrap();
        assert!(matches!(cfg.build().unwrap(), Prior::Rect(_)));
        assert!(PriorConfig::rect(MU, 0.0).build().is_err());
        assert!(PriorConfig::gaussian(MU, 0.25, 1.0).build().is_err());
        assert!(toml::from_str::<PriorConfig>("family = \"rect\"\nmu = [1.1, 2.0]\nwidth = 0.6").is_err());
    }
}
