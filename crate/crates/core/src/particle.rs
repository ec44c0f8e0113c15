//! Particle approximation of the posterior over the phase pair.
//!
//! Weights are updated multiplicatively with the single-probe likelihood;
//! when the effective sample size falls below `threshold_fraction·M` the
//! cloud is regenerated by Liu-West resampling (bootstrap draw, shrinkage
//! towards the mean by `a`, Gaussian jitter with covariance `(1−a²)Σ`).
//! Estimates use circular statistics because the phases are periodic.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::{likelihood, sample_outcome, wrap_angle, wrap_signed};
use crate::interferometer::{InterferometerSpec, PhasePair, MODES};
use crate::linalg::{outer, Mat2, Vec2};
use crate::priors::{self, Prior};

/// Default particle count.
pub const DEFAULT_PARTICLES: usize = 1600;

const MIN_RESULTANT: f64 = 1e-9;
const JITTER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResampleParams {
    /// Shrinkage parameter in `[0, 1]`.
    pub a: f64,
    /// Resample when ESS < `threshold_fraction · M`.
    pub threshold_fraction: f64,
}

impl Default for ResampleParams {
    fn default() -> Self {
        ResampleParams {
            a: 0.98,
            threshold_fraction: 0.5,
        }
    }
}

impl ResampleParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.a) {
            return Err(Error::Config(format!("resample a = {} not in [0, 1]", self.a)));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "threshold_fraction = {} not in (0, 1]",
                self.threshold_fraction
            )));
        }
        Ok(())
    }
}

/// Weighted particles; positions wrapped into `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    positions: Vec<Vec2>,
    weights: Vec<f64>,
}

impl ParticleSet {
    /// Builds a set from raw parts, wrapping positions and normalizing
    /// weights.
    pub fn from_parts(positions: Vec<Vec2>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() || positions.is_empty() {
            return Err(Error::Domain("positions/weights length mismatch or empty".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("negative or NaN weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        let positions = positions
            .into_iter()
            .map(|p| [wrap_angle(p[0]), wrap_angle(p[1])])
            .collect();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(ParticleSet { positions, weights })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec2, f64)> {
        self.positions.iter().zip(self.weights.iter().copied())
    }
}

/// Estimate, covariance and ESS of a particle set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub phi_hat: Vec2,
    pub sigma: Mat2,
    pub ess: f64,
}

impl PosteriorSummary {
    pub fn total_variance(&self) -> f64 {
        self.sigma.trace()
    }
}

/// `m` draws from the prior with uniform weights.
pub fn init_particles<R: Rng + ?Sized>(prior: &Prior, m: usize, rng: &mut R) -> Result<ParticleSet> {
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 particles, got {m}")));
    }
    let positions = (0..m)
        .map(|_| {
            let p = priors::sample(prior, rng);
            [wrap_angle(p[0]), wrap_angle(p[1])]
        })
        .collect();
    Ok(ParticleSet {
        positions,
        weights: vec![1.0 / m as f64; m],
    })
}

/// Multiplies each weight by `p(outcome | y_i)` and renormalizes.
pub fn bayes_update(ps: &ParticleSet, outcome: usize, spec: &InterferometerSpec) -> Result<ParticleSet> {
    let mut next = ps.clone();
    bayes_update_in_place(&mut next, outcome, spec)?;
    Ok(next)
}

pub(crate) fn bayes_update_in_place(
    ps: &mut ParticleSet,
    outcome: usize,
    spec: &InterferometerSpec,
) -> Result<()> {
    let mut total = 0.0;
    for (y, w) in ps.positions.iter().zip(ps.weights.iter_mut()) {
        *w *= spec.probs_at(y[0], y[1])[outcome];
        total += *w;
    }
    if !(total > 0.0) {
        return Err(Error::DegeneratePosterior { outcome });
    }
    ps.weights.iter_mut().for_each(|w| *w /= total);
    Ok(())
}

/// Effective sample size `1/Σwᵢ²`.
pub fn ess(ps: &ParticleSet) -> f64 {
    1.0 / ps.weights.iter().map(|w| w * w).sum::<f64>()
}

/// Per-component circular mean `arg Σ wᵢ e^{i yᵢⱼ}`, wrapped into `[0, 2π)`.
pub fn circular_mean(ps: &ParticleSet) -> Result<Vec2> {
    let mut c = [0.0; 2];
    let mut s = [0.0; 2];
    for (y, w) in ps.iter() {
        for j in 0..2 {
            let (sn, cs) = y[j].sin_cos();
            c[j] += w * cs;
            s[j] += w * sn;
        }
    }
    let mut out = [0.0; 2];
    for j in 0..2 {
        let r = c[j].hypot(s[j]);
        if !(r > MIN_RESULTANT) {
            return Err(Error::UndefinedMean(r));
        }
        out[j] = wrap_angle(s[j].atan2(c[j]));
    }
    Ok(out)
}

fn covariance_about(ps: &ParticleSet, mean: Vec2) -> Mat2 {
    let mut sigma = Mat2::ZERO;
    for (y, w) in ps.iter() {
        let d = [wrap_signed(y[0] - mean[0]), wrap_signed(y[1] - mean[1])];
        sigma = sigma.add(&outer(d, d).scale(w));
    }
    sigma.0[1][0] = sigma.0[0][1];
    sigma
}

/// Weighted second moment of deviations unwrapped into `(−π, π]` about the
/// circular mean.
pub fn circular_covariance(ps: &ParticleSet) -> Result<Mat2> {
    let mean = circular_mean(ps)?;
    Ok(covariance_about(ps, mean))
}

pub fn summarize(ps: &ParticleSet) -> Result<PosteriorSummary> {
    let phi_hat = circular_mean(ps)?;
    Ok(PosteriorSummary {
        phi_hat,
        sigma: covariance_about(ps, phi_hat),
        ess: ess(ps),
    })
}

/// Liu-West resampling: `M` bootstrap draws by weight, each moved to
/// `a·yᵢ + (1−a)·φ̂` and jittered by `N(0, (1−a²)Σ)`; weights reset to
/// uniform.
pub fn liu_west_resample<R: Rng + ?Sized>(
    ps: &ParticleSet,
    params: &ResampleParams,
    rng: &mut R,
) -> Result<ParticleSet> {
    let m = ps.len();
    let mean = circular_mean(ps)?;
    let mut sigma = covariance_about(ps, mean);
    if sigma.sym_eigenvalues()[1] < JITTER_FLOOR {
        sigma = sigma.add(&Mat2::diag(JITTER_FLOOR, JITTER_FLOOR));
    }
    let a = params.a;
    let jitter_scale = (1.0 - a * a).max(0.0);
    let chol = if jitter_scale > 0.0 {
        Some(sigma.scale(jitter_scale).cholesky()?)
    } else {
        None
    };

    let mut cumulative = Vec::with_capacity(m);
    let mut acc = 0.0;
    for &w in &ps.weights {
        acc += w;
        cumulative.push(acc);
    }

    let mut positions = Vec::with_capacity(m);
    for _ in 0..m {
        let u: f64 = rng.gen::<f64>() * acc;
        let idx = cumulative.partition_point(|&c| c <= u).min(m - 1);
        let y = ps.positions[idx];
        let mut next = [0.0; 2];
        for j in 0..2 {
            // shrink along the short arc towards the mean
            let d = wrap_signed(y[j] - mean[j]);
            next[j] = mean[j] + a * d;
        }
        if let Some(l) = chol {
            let z: Vec2 = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let e = l.mul_vec(z);
            next[0] += e[0];
            next[1] += e[1];
        }
        positions.push([wrap_angle(next[0]), wrap_angle(next[1])]);
    }
    Ok(ParticleSet {
        positions,
        weights: vec![1.0 / m as f64; m],
    })
}

/// Full simulated estimation run.
///
/// Element 0 of the result summarizes the prior cloud; element `k` the
/// posterior after `k` probes. Each summary is taken after the Bayes update
/// and before any resampling triggered at that step.
pub fn run_estimation<R: Rng + ?Sized>(
    spec: &InterferometerSpec,
    prior: &Prior,
    phi_true: PhasePair,
    n: usize,
    particles: usize,
    params: &ResampleParams,
    rng: &mut R,
) -> Result<Vec<PosteriorSummary>> {
    let mut trajectory = Vec::with_capacity(n + 1);
    run_estimation_with(spec, prior, phi_true, n, particles, params, rng, |_, _, summary| {
        trajectory.push(summary)
    })?;
    Ok(trajectory)
}

/// As [`run_estimation`], calling `observe(k, set, summary)` after each step
/// instead of collecting.
#[allow(clippy::too_many_arguments)]
pub fn run_estimation_with<R, F>(
    spec: &InterferometerSpec,
    prior: &Prior,
    phi_true: PhasePair,
    n: usize,
    particles: usize,
    params: &ResampleParams,
    rng: &mut R,
    mut observe: F,
) -> Result<ParticleSet>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &ParticleSet, PosteriorSummary),
{
    let truth_dist = likelihood(spec, phi_true);
    let mut ps = init_particles(prior, particles, rng)?;
    observe(0, &ps, summarize(&ps)?);
    for k in 1..=n {
        let x = sample_outcome(&truth_dist, rng);
        step(&mut ps, x, spec, params, rng, |set, summary| observe(k, set, summary))?;
    }
    Ok(ps)
}

/// Filters a given outcome sequence instead of simulating one. Element 0
/// summarizes the prior cloud.
pub fn filter_outcomes<R: Rng + ?Sized>(
    spec: &InterferometerSpec,
    prior: &Prior,
    outcomes: &[usize],
    particles: usize,
    params: &ResampleParams,
    rng: &mut R,
) -> Result<Vec<PosteriorSummary>> {
    let mut ps = init_particles(prior, particles, rng)?;
    let mut trajectory = Vec::with_capacity(outcomes.len() + 1);
    trajectory.push(summarize(&ps)?);
    for &x in outcomes {
        if x >= MODES {
            return Err(Error::Domain(format!("outcome {x} not in 0..{MODES}")));
        }
        step(&mut ps, x, spec, params, rng, |_, summary| trajectory.push(summary))?;
    }
    Ok(trajectory)
}

fn step<R: Rng + ?Sized>(
    ps: &mut ParticleSet,
    x: usize,
    spec: &InterferometerSpec,
    params: &ResampleParams,
    rng: &mut R,
    mut observe: impl FnMut(&ParticleSet, PosteriorSummary),
) -> Result<()> {
    bayes_update_in_place(ps, x, spec)?;
    observe(ps, summarize(ps)?);
    if ess(ps) < params.threshold_fraction * ps.len() as f64 {
        *ps = liu_west_resample(ps, params, rng)?;
    }
    Ok(())
}

/// Trajectory CSV: `k,phi1,phi2,s11,s12,s22,ess`.
pub fn write_trajectory_csv<W: std::io::Write>(out: W, trajectory: &[PosteriorSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["k", "phi1", "phi2", "s11", "s12", "s22", "ess"]).map_err(fmt)?;
    for (k, s) in trajectory.iter().enumerate() {
        w.write_record([
            k.to_string(),
            s.phi_hat[0].to_string(),
            s.phi_hat[1].to_string(),
            s.sigma.get(0, 0).to_string(),
            s.sigma.get(0, 1).to_string(),
            s.sigma.get(1, 1).to_string(),
            s.ess.to_string(),
        ])
        .map_err(fmt)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}

/// Circular distance between two phase points (per-component wrapped
/// differences, Euclidean norm).
pub fn circular_distance(a: Vec2, b: Vec2) -> f64 {
    wrap_signed(a[0] - b[0]).hypot(wrap_signed(a[1] - b[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use std::f64::consts::TAU;
    use rand_chacha::ChaCha8Rng;

    const MU: Vec2 = [1.1, 2.0];

    fn gaussian() -> Prior {
        Prior::gaussian(MU, 0.25, 0.0).unwrap()
    }

    #[test]
    fn init_uniform_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ps = init_particles(&gaussian(), 1600, &mut rng).unwrap();
        assert!(ps.weights().iter().all(|&w| w == 1.0 / 1600.0));
        assert!((ess(&ps) - 1600.0).abs() < 1e-9);
        let cov = circular_covariance(&ps).unwrap();
        let gamma = gaussian().covariance();
        let rel = Mat2::add(&cov, &gamma.scale(-1.0)).frobenius() / gamma.frobenius();
        assert!(rel < 0.15, "{rel}");
        assert!(init_particles(&gaussian(), 1, &mut rng).is_err());
    }

    #[test]
    fn ess_examples() {
        let pos = vec![[0.0, 0.0]; 6];
        let one_hot = ParticleSet::from_parts(pos.clone(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((ess(&one_hot) - 1.0).abs() < 1e-15);
        let w = vec![0.5, 0.25, 0.25, 0.0, 0.0, 0.0];
        let ps = ParticleSet::from_parts(pos, w).unwrap();
        assert!((ess(&ps) - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn update_with_constant_likelihood_is_identity() {
        // identity interferometer: photon always exits port 0
        let id = crate::interferometer::UnitaryMatrix3::identity();
        let spec = InterferometerSpec::new(id, id, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ps = init_particles(&gaussian(), 100, &mut rng).unwrap();
        let next = bayes_update(&ps, 0, &spec).unwrap();
        for (a, b) in next.weights().iter().zip(ps.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(
            bayes_update(&ps, 1, &spec),
            Err(Error::DegeneratePosterior { outcome: 1 })
        ));
    }

    #[test]
    fn zero_likelihood_particle_gets_zero_weight() {
        let spec = InterferometerSpec::dft();
        // at φ = (0, 0) the photon always exits port 0
        let ps = ParticleSet::from_parts(vec![[0.0, 0.0], [1.0, 2.0]], vec![0.5, 0.5]).unwrap();
        let next = bayes_update(&ps, 1, &spec).unwrap();
        assert!(next.weights()[0] < 1e-25);
        assert!((next.weights()[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circular_mean_examples() {
        let ps = ParticleSet::from_parts(vec![[1.1, 2.0]; 5], vec![1.0; 5]).unwrap();
        let m = circular_mean(&ps).unwrap();
        assert!((m[0] - 1.1).abs() < 1e-12 && (m[1] - 2.0).abs() < 1e-12);
        assert!(circular_covariance(&ps).unwrap().frobenius() < 1e-20);

        let ps = ParticleSet::from_parts(vec![[0.1, 1.0], [TAU - 0.1, 1.0]], vec![1.0, 1.0]).unwrap();
        let m = circular_mean(&ps).unwrap();
        assert!(wrap_signed(m[0]).abs() < 1e-12);

        let ps = ParticleSet::from_parts(vec![[0.0, 1.0], [std::f64::consts::PI, 1.0]], vec![1.0, 1.0])
            .unwrap();
        assert!(matches!(circular_mean(&ps), Err(Error::UndefinedMean(_))));
    }

    #[test]
    fn tight_cluster_matches_linear_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let positions: Vec<Vec2> = (0..500)
            .map(|_| [2.0 + 0.01 * rng.gen::<f64>(), 3.0 + 0.02 * rng.gen::<f64>()])
            .collect();
        let weights: Vec<f64> = (0..500).map(|_| rng.gen::<f64>()).collect();
        let ps = ParticleSet::from_parts(positions.clone(), weights.clone()).unwrap();
        let total: f64 = weights.iter().sum();
        let mut lin_mean = [0.0; 2];
        for (y, w) in positions.iter().zip(&weights) {
            lin_mean[0] += w / total * y[0];
            lin_mean[1] += w / total * y[1];
        }
        let mut lin_cov = Mat2::ZERO;
        for (y, w) in positions.iter().zip(&weights) {
            let d = [y[0] - lin_mean[0], y[1] - lin_mean[1]];
            lin_cov = lin_cov.add(&outer(d, d).scale(w / total));
        }
        let m = circular_mean(&ps).unwrap();
        assert!((m[0] - lin_mean[0]).abs() < 1e-6 && (m[1] - lin_mean[1]).abs() < 1e-6);
        let c = circular_covariance(&ps).unwrap();
        assert!(c.max_abs_diff(&lin_cov) < 1e-9);
    }

    #[test]
    fn resample_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ps = init_particles(&gaussian(), 400, &mut rng).unwrap();
        let weighted = bayes_update(&ps, 2, &InterferometerSpec::dft()).unwrap();
        let next = liu_west_resample(&weighted, &ResampleParams::default(), &mut rng).unwrap();
        assert!((ess(&next) - 400.0).abs() < 1e-9);

        let exact = ResampleParams { a: 1.0, threshold_fraction: 0.5 };
        let next = liu_west_resample(&weighted, &exact, &mut rng).unwrap();
        for y in next.positions() {
            let found = weighted
                .positions()
                .iter()
                .any(|p| (p[0] - y[0]).abs() < 1e-12 && (p[1] - y[1]).abs() < 1e-12);
            assert!(found);
        }
    }

    #[test]
    fn resample_handles_degenerate_cloud() {
        let ps = ParticleSet::from_parts(vec![[1.0, 1.0]; 10], vec![1.0; 10]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let next = liu_west_resample(&ps, &ResampleParams::default(), &mut rng).unwrap();
        assert!(next.positions().iter().all(|p| (p[0] - 1.0).abs() < 1e-4));
    }

    #[test]
    fn prior_only_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let traj = run_estimation(
            &InterferometerSpec::dft(),
            &gaussian(),
            PhasePair::new(1.1, 2.0),
            0,
            DEFAULT_PARTICLES,
            &ResampleParams::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(traj.len(), 1);
        let v = traj[0].total_variance();
        assert!((v - 0.125).abs() < 0.1 * 0.125, "{v}");
    }

    #[test]
    fn trajectory_csv_layout() {
        let s = PosteriorSummary {
            phi_hat: [1.0, 2.0],
            sigma: Mat2::symmetric(0.1, 0.01, 0.2),
            ess: 1600.0,
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "k,phi1,phi2,s11,s12,s22,ess\n0,1,2,0.1,0.01,0.2,1600\n");
    }
}
