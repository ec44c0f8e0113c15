//! Seeded Monte Carlo studies comparing the particle-filter posterior
//! variance with the Bayesian bounds.
//!
//! Every run `r` of an experiment draws from its own ChaCha stream seeded by
//! [`run_seed`]`(master_seed, r)`, so results do not depend on how runs are
//! spread over worker threads. Aggregation always happens in run order.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bounds_over_schedule, BoundRecord, BoundToggles, ZZSettings};
use crate::error::{Error, Result};
use crate::interferometer::{fisher_correlation, fisher_matrix, InterferometerSpec, PhasePair};
use crate::linalg::Vec2;
use crate::particle::{circular_distance, run_estimation_with, ResampleParams, DEFAULT_PARTICLES};
use crate::priors::{self, PriorConfig, PriorFamily};

/// Largest probe count accepted in a schedule.
pub const MAX_PROBES: usize = 10_000;

/// How the true phases of each run are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthMode {
    /// Redraw the truth from the prior for every run (the setting in which
    /// the Bayesian bounds apply).
    #[default]
    DrawFromPrior,
    FixedAtMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleParams {
    pub count: usize,
    pub a: f64,
    pub threshold_fraction: f64,
}

impl Default for ParticleParams {
    fn default() -> Self {
        let r = ResampleParams::default();
        ParticleParams {
            count: DEFAULT_PARTICLES,
            a: r.a,
            threshold_fraction: r.threshold_fraction,
        }
    }
}

impl ParticleParams {
    pub fn resample(&self) -> ResampleParams {
        ResampleParams {
            a: self.a,
            threshold_fraction: self.threshold_fraction,
        }
    }
}

/// Everything needed to reproduce one Monte Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub config_id: String,
    pub interferometer: InterferometerSpec,
    pub prior: PriorConfig,
    pub n_schedule: Vec<usize>,
    pub k: usize,
    pub master_seed: u64,
    pub truth_mode: TruthMode,
    pub bounds: BoundToggles,
    pub zz: ZZSettings,
    pub particles: ParticleParams,
}

impl ExperimentSpec {
    /// DFT interferometer, Gaussian prior at `(1.1, 2.0)` with `σ = 0.25`,
    /// `ρ = 0`, 300 runs.
    pub fn baseline(config_id: &str, n_schedule: Vec<usize>) -> Self {
        ExperimentSpec {
            config_id: config_id.to_string(),
            interferometer: InterferometerSpec::dft(),
            prior: PriorConfig::gaussian([1.1, 2.0], 0.25, 0.0),
            n_schedule,
            k: 300,
            master_seed: 0x5eed,
            truth_mode: TruthMode::DrawFromPrior,
            bounds: BoundToggles::default(),
            zz: ZZSettings::default(),
            particles: ParticleParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_schedule must be strictly increasing".into()));
        }
        match self.n_schedule.last() {
            Some(&m) if m > MAX_PROBES => {
                return Err(Error::Config(format!("n_schedule entries must be <= {MAX_PROBES}")))
            }
            _ => {}
        }
        if self.particles.count < 2 {
            return Err(Error::Config("particles.count must be >= 2".into()));
        }
        self.particles.resample().validate()?;
        self.zz.validate()?;
        let prior = self.prior.build()?;
        if self.bounds.vt && !prior.is_derivable() {
            return Err(Error::NonDerivablePrior);
        }
        Ok(())
    }
}

/// Per-`n` summary over the `k` runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub config_id: String,
    pub n: usize,
    /// Mean of `Tr Σ` over runs.
    pub v_mean: f64,
    /// Standard error of `v_mean`.
    pub v_stderr: f64,
    /// Mean squared circular error of the estimate against the truth.
    pub mse_mean: f64,
    pub v_crb: Option<f64>,
    pub v_vt: Option<f64>,
    pub v_zz: Option<f64>,
}

/// Final weighted particles of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSnapshot {
    pub config_id: String,
    pub run: usize,
    pub n: usize,
    pub truth: Vec2,
    /// `(φ₁, φ₂, w)` triples.
    pub particles: Vec<[f64; 3]>,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `run` under `master_seed`.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    mix64(master_seed ^ mix64(run as u64))
}

struct RunOutcome {
    /// `(Tr Σ, squared error)` at each scheduled `n`.
    points: Vec<(f64, f64)>,
    cloud: Option<CloudSnapshot>,
}

fn single_run(spec: &ExperimentSpec, prior: &priors::Prior, run: usize, keep_cloud: bool) -> Result<RunOutcome> {
    let seed = run_seed(spec.master_seed, run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = match spec.truth_mode {
        TruthMode::DrawFromPrior => priors::sample(prior, &mut rng),
        TruthMode::FixedAtMean => prior.mu(),
    };
    let truth = PhasePair::from(truth);
    let n_max = spec.n_schedule.last().copied().unwrap_or(0);
    let mut points = Vec::with_capacity(spec.n_schedule.len());
    let mut next = 0;
    let mut cloud = None;
    run_estimation_with(
        &spec.interferometer,
        prior,
        truth,
        n_max,
        spec.particles.count,
        &spec.particles.resample(),
        &mut rng,
        |k, ps, summary| {
            if next < spec.n_schedule.len() && spec.n_schedule[next] == k {
                let err = circular_distance(summary.phi_hat, truth.as_array());
                points.push((summary.total_variance(), err * err));
                next += 1;
            }
            if keep_cloud && k == n_max {
                cloud = Some(CloudSnapshot {
                    config_id: spec.config_id.clone(),
                    run,
                    n: k,
                    truth: truth.as_array(),
                    particles: ps.iter().map(|(y, w)| [y[0], y[1], w]).collect(),
                });
            }
        },
    )
    .map_err(|e| Error::RunFailed {
        run,
        seed,
        source: Box::new(e),
    })?;
    Ok(RunOutcome { points, cloud })
}

/// Runs the study and attaches bound values per `n`.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<Vec<AggregateRecord>> {
    Ok(run_monte_carlo_with_clouds(spec, 0)?.0)
}

/// As [`run_monte_carlo`], also returning the final particle clouds of the
/// first `cloud_runs` runs.
pub fn run_monte_carlo_with_clouds(
    spec: &ExperimentSpec,
    cloud_runs: usize,
) -> Result<(Vec<AggregateRecord>, Vec<CloudSnapshot>)> {
    spec.validate()?;
    let prior = spec.prior.build()?;
    let outcomes = (0..spec.k)
        .into_par_iter()
        .map(|r| single_run(spec, &prior, r, r < cloud_runs))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let bounds = if spec.bounds.crb || spec.bounds.vt || spec.bounds.zz {
        bounds_over_schedule(&spec.interferometer, &prior, &spec.n_schedule, spec.bounds, &spec.zz)?
    } else {
        Vec::new()
    };

    let k = spec.k as f64;
    let records = spec
        .n_schedule
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let v_mean = outcomes.iter().map(|o| o.points[i].0).sum::<f64>() / k;
            let mse_mean = outcomes.iter().map(|o| o.points[i].1).sum::<f64>() / k;
            let v_stderr = if spec.k > 1 {
                let ss: f64 = outcomes.iter().map(|o| (o.points[i].0 - v_mean).powi(2)).sum();
                (ss / (k - 1.0)).sqrt() / k.sqrt()
            } else {
                0.0
            };
            let b: Option<&BoundRecord> = bounds.get(i);
            AggregateRecord {
                config_id: spec.config_id.clone(),
                n,
                v_mean,
                v_stderr,
                mse_mean,
                v_crb: b.and_then(|b| b.v_crb),
                v_vt: b.and_then(|b| b.v_vt),
                v_zz: b.and_then(|b| b.v_zz),
            }
        })
        .collect();
    let clouds = outcomes.into_iter().filter_map(|o| o.cloud).collect();
    Ok((records, clouds))
}

fn gaussian_parts(base: &ExperimentSpec) -> Result<(Vec2, f64, f64)> {
    match base.prior {
        PriorConfig {
            family: PriorFamily::Gaussian,
            mu,
            sigma: Some(sigma),
            rho,
            ..
        } => Ok((mu, sigma, rho.unwrap_or(0.0))),
        _ => Err(Error::Config("this study needs a gaussian base prior".into())),
    }
}

fn tag(x: f64) -> String {
    format!("{x}")
}

/// One experiment of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    /// Value of the swept parameter.
    pub param: f64,
    pub spec: ExperimentSpec,
    pub records: Vec<AggregateRecord>,
}

impl Curve {
    fn run(param: f64, spec: ExperimentSpec) -> Result<Self> {
        let records = run_monte_carlo(&spec)?;
        Ok(Curve { param, spec, records })
    }
}

/// One experiment per prior correlation, sharing the base seed.
pub fn sweep_rho(base: &ExperimentSpec, rho_list: &[f64]) -> Result<Vec<Curve>> {
    let (mu, sigma, _) = gaussian_parts(base)?;
    rho_list
        .iter()
        .map(|&rho| {
            if !(rho.abs() < 1.0) {
                return Err(Error::Config(format!("rho = {rho} outside (-1, 1)")));
            }
            let spec = ExperimentSpec {
                config_id: format!("{}_rho{}", base.config_id, tag(rho)),
                prior: PriorConfig::gaussian(mu, sigma, rho),
                ..base.clone()
            };
            Curve::run(rho, spec)
        })
        .collect()
}

/// How the prior correlation is set at each grid point from the Fisher
/// correlation `ν(μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoRule {
    /// `ρ = ν`
    Matched,
    /// `ρ = 0`
    Zero,
    /// `ρ = −ν`
    Anti,
    /// `ρ = −1/ν`; only valid when `|ν| > 1`, which never happens, so this
    /// always fails validation. Kept so the rule can be requested and
    /// rejected explicitly.
    InverseAnti,
}

impl RhoRule {
    pub fn apply(&self, nu: f64) -> Result<f64> {
        let rho = match self {
            RhoRule::Matched => nu,
            RhoRule::Zero => 0.0,
            RhoRule::Anti => -nu,
            RhoRule::InverseAnti => -1.0 / nu,
        };
        if !(rho.abs() < 1.0) {
            return Err(Error::Config(format!(
                "rule {self:?} gives rho = {rho} (nu = {nu}), not a valid correlation"
            )));
        }
        Ok(rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCell {
    pub mu: Vec2,
    pub nu: f64,
    pub rho: f64,
    pub v_mean: f64,
    pub v_stderr: f64,
    pub v_zz: f64,
    /// `(v_mean − v_zz)/v_zz`
    pub gap: f64,
    /// `v_stderr/v_zz`
    pub gap_stderr: f64,
}

/// Relative gap between the single-probe posterior variance and the
/// Ziv-Zakai bound over a grid of prior means.
pub fn n1_gap_grid(base: &ExperimentSpec, mu1: &[f64], mu2: &[f64], rule: RhoRule) -> Result<Vec<GapCell>> {
    let (_, sigma, _) = gaussian_parts(base)?;
    let mut cells = Vec::with_capacity(mu1.len() * mu2.len());
    for &m1 in mu1 {
        for &m2 in mu2 {
            let f = fisher_matrix(&base.interferometer, PhasePair::new(m1, m2));
            let nu = fisher_correlation(&f)?;
            let rho = rule.apply(nu)?;
            let spec = ExperimentSpec {
                config_id: format!("{}_mu{}_{}", base.config_id, tag(m1), tag(m2)),
                prior: PriorConfig::gaussian([m1, m2], sigma, rho),
                n_schedule: vec![1],
                bounds: BoundToggles {
                    crb: false,
                    vt: false,
                    zz: true,
                },
                ..base.clone()
            };
            let rec = run_monte_carlo(&spec)?.remove(0);
            let v_zz = rec.v_zz.expect("zz requested");
            cells.push(GapCell {
                mu: [m1, m2],
                nu,
                rho,
                v_mean: rec.v_mean,
                v_stderr: rec.v_stderr,
                v_zz,
                gap: (rec.v_mean - v_zz) / v_zz,
                gap_stderr: rec.v_stderr / v_zz,
            });
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweep {
    pub curves: Vec<Curve>,
    /// Final clouds for the narrowest and widest prior.
    pub clouds: Vec<CloudSnapshot>,
}

/// One experiment per prior width; final particle clouds of the first
/// `cloud_runs` runs are kept for the extreme widths.
pub fn sweep_sigma(base: &ExperimentSpec, sigma_list: &[f64], cloud_runs: usize) -> Result<SigmaSweep> {
    let (mu, _, rho) = gaussian_parts(base)?;
    let lo = sigma_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sigma_list.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut curves = Vec::with_capacity(sigma_list.len());
    let mut clouds = Vec::new();
    for &sigma in sigma_list {
        if !(sigma > 0.0) {
            return Err(Error::Config(format!("sigma = {sigma} must be positive")));
        }
        let spec = ExperimentSpec {
            config_id: format!("{}_sigma{}", base.config_id, tag(sigma)),
            prior: PriorConfig::gaussian(mu, sigma, rho),
            ..base.clone()
        };
        let keep = if sigma == lo || sigma == hi { cloud_runs } else { 0 };
        let (records, c) = run_monte_carlo_with_clouds(&spec, keep)?;
        curves.push(Curve {
            param: sigma,
            spec,
            records,
        });
        clouds.extend(c);
    }
    Ok(SigmaSweep { curves, clouds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectReport {
    pub curves: Vec<Curve>,
    /// Set when the base spec asked for the Van Trees bound.
    pub vt_note: Option<String>,
}

/// Rectangular-prior runs of width `Δ`; only the Ziv-Zakai bound applies.
pub fn rect_prior_run(base: &ExperimentSpec, delta_list: &[f64]) -> Result<RectReport> {
    let vt_note = base
        .bounds
        .vt
        .then(|| format!("v_vt unavailable: {}", Error::NonDerivablePrior));
    let curves = delta_list
        .iter()
        .map(|&delta| {
            let spec = ExperimentSpec {
                config_id: format!("{}_delta{}", base.config_id, tag(delta)),
                prior: PriorConfig::rect(base.prior.mu, delta),
                bounds: BoundToggles {
                    vt: false,
                    ..base.bounds
                },
                ..base.clone()
            };
            Curve::run(delta, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RectReport { curves, vt_note })
}

/// Counts posterior modes: particles carrying at least `min_weight` of the
/// maximum weight are single-linkage clustered at distance `linkage`, and
/// clusters holding at least `min_mass` of the total weight are counted.
pub fn posterior_modes(cloud: &CloudSnapshot, linkage: f64, min_weight: f64, min_mass: f64) -> usize {
    let w_max = cloud.particles.iter().map(|p| p[2]).fold(0.0, f64::max);
    let pts: Vec<&[f64; 3]> = cloud.particles.iter().filter(|p| p[2] >= min_weight * w_max).collect();
    let mut parent: Vec<usize> = (0..pts.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            if circular_distance([pts[i][0], pts[i][1]], [pts[j][0], pts[j][1]]) <= linkage {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let total: f64 = pts.iter().map(|p| p[2]).sum();
    let mut mass = vec![0.0; pts.len()];
    for i in 0..pts.len() {
        let root = find(&mut parent, i);
        mass[root] += pts[i][2];
    }
    mass.iter().filter(|&&m| m >= min_mass * total && m > 0.0).count()
}

/// Output format of the exporters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (csv|json)"))),
        }
    }
}

pub const RECORD_HEADER: [&str; 8] = ["config_id", "n", "v_mean", "v_stderr", "mse_mean", "v_crb", "v_vt", "v_zz"];
pub const BOUND_HEADER: [&str; 8] = ["n", "v_crb", "v_vt", "v_zz", "u1x", "u1y", "u2x", "u2y"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn records_to_csv(records: &[AggregateRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.config_id.clone(),
            r.n.to_string(),
            r.v_mean.to_string(),
            r.v_stderr.to_string(),
            r.mse_mean.to_string(),
            opt(r.v_crb),
            opt(r.v_vt),
            opt(r.v_zz),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

pub fn records_from_csv(text: &str) -> Result<Vec<AggregateRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(Error::Format(format!("unexpected header {headers:?}")));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Format(format!("bad number `{s}`"))) };
    let opt_num = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    rdr.records()
        .map(|row| {
            let row = row.map_err(csv_err)?;
            Ok(AggregateRecord {
                config_id: row[0].to_string(),
                n: row[1].parse().map_err(|_| Error::Format(format!("bad n `{}`", &row[1])))?,
                v_mean: num(&row[2])?,
                v_stderr: num(&row[3])?,
                mse_mean: num(&row[4])?,
                v_crb: opt_num(&row[5])?,
                v_vt: opt_num(&row[6])?,
                v_zz: opt_num(&row[7])?,
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct RecordDocument<'a> {
    version: String,
    spec: std::borrow::Cow<'a, ExperimentSpec>,
    records: std::borrow::Cow<'a, [AggregateRecord]>,
}

/// Writes records as CSV, or as JSON embedding the full spec.
pub fn export_records(spec: &ExperimentSpec, records: &[AggregateRecord], path: &Path, format: ExportFormat) -> Result<()> {
    let bytes = match format {
        ExportFormat::Csv => records_to_csv(records)?,
        ExportFormat::Json => {
            let doc = RecordDocument {
                version: crate::VERSION.to_string(),
                spec: std::borrow::Cow::Borrowed(spec),
                records: std::borrow::Cow::Borrowed(records),
            };
            let mut v = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
            v.push(b'\n');
            v
        }
    };
    write_file(path, &bytes)
}

/// Parses a JSON document written by [`export_records`].
pub fn records_from_json(text: &str) -> Result<(ExperimentSpec, Vec<AggregateRecord>)> {
    let doc: RecordDocument = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    Ok((doc.spec.into_owned(), doc.records.into_owned()))
}

pub fn bounds_to_csv(bounds: &[BoundRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BOUND_HEADER).map_err(csv_err)?;
    for b in bounds {
        let [u1, u2] = b.directions;
        w.write_record([
            b.n.to_string(),
            opt(b.v_crb),
            opt(b.v_vt),
            opt(b.v_zz),
            u1[0].to_string(),
            u1[1].to_string(),
            u2[0].to_string(),
            u2[1].to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

/// Writes bound rows as CSV, or as JSON embedding the Ziv-Zakai settings.
pub fn export_bounds(bounds: &[BoundRecord], settings: &ZZSettings, path: &Path, format: ExportFormat) -> Result<()> {
    let bytes = match format {
        ExportFormat::Csv => bounds_to_csv(bounds)?,
        ExportFormat::Json => {
            let doc = serde_json::json!({
                "version": crate::VERSION,
                "zz_settings": settings,
                "bounds": bounds,
            });
            let mut v = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
            v.push(b'\n');
            v
        }
    };
    write_file(path, &bytes)
}

/// Writes `(run, phi1, phi2, weight)` rows for each snapshot.
pub fn export_clouds(clouds: &[CloudSnapshot], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config_id", "run", "n", "phi1", "phi2", "weight"]).map_err(csv_err)?;
    for c in clouds {
        for p in &c.particles {
            w.write_record([
                c.config_id.clone(),
                c.run.to_string(),
                c.n.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                p[2].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    write_file(path, &bytes)
}
