//! Run-config documents.
//!
//! ```toml
//! schema_version = 1
//! config_id = "smoke"
//! n_schedule = [1, 5]
//! k = 2
//!
//! [prior]
//! family = "gaussian"
//! mu = [1.1, 2.0]
//! sigma = 0.25
//! rho = 0.0
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use multiphase_core::experiments::{ExperimentSpec, ExportFormat, ParticleParams, TruthMode, MAX_PROBES};
use multiphase_core::{BoundToggles, InterferometerSpec, PriorConfig, PriorFamily, ZZSettings};
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: Spanned<u32>,
    #[serde(default)]
    config_id: Option<String>,
    n_schedule: Spanned<Vec<usize>>,
    #[serde(default)]
    k: Option<Spanned<i64>>,
    #[serde(default)]
    master_seed: Option<u64>,
    #[serde(default)]
    truth_mode: TruthMode,
    #[serde(default)]
    particles: ParticleParams,
    #[serde(default)]
    interferometer: Option<Spanned<toml::Table>>,
    prior: Spanned<RawPrior>,
    #[serde(default)]
    bounds: BoundToggles,
    #[serde(default)]
    zz: ZZSettings,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrior {
    family: PriorFamily,
    mu: [f64; 2],
    #[serde(default)]
    sigma: Option<Spanned<f64>>,
    #[serde(default)]
    rho: Option<Spanned<f64>>,
    #[serde(default)]
    delta: Option<Spanned<f64>>,
}

/// `[output]` table.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Option<ExportFormat>,
    /// Number of runs whose final particle clouds are exported.
    pub clouds: usize,
}

/// A validated run config.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub output: OutputConfig,
}

pub const DEFAULT_SEED: u64 = 0x5eed;

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

impl RunConfig {
    /// Parses and validates a config document. `base_dir` resolves a
    /// relative `interferometer.file`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let at = |span: Range<usize>, msg: String| CliError::Config(format!("line {}: {msg}", line_of(text, span)));

        if *raw.schema_version.get_ref() != SCHEMA_VERSION {
            return Err(at(
                raw.schema_version.span(),
                format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    raw.schema_version.get_ref()
                ),
            ));
        }

        let schedule = raw.n_schedule.get_ref();
        if schedule.is_empty() {
            return Err(at(raw.n_schedule.span(), "n_schedule must not be empty".into()));
        }
        if schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(at(raw.n_schedule.span(), "n_schedule must be strictly increasing".into()));
        }
        if schedule.iter().any(|&n| n > MAX_PROBES) {
            return Err(at(raw.n_schedule.span(), format!("n_schedule entries must be <= {MAX_PROBES}")));
        }

        let k = match &raw.k {
            Some(k) if *k.get_ref() < 1 => {
                return Err(at(k.span(), format!("k = {} must be >= 1", k.get_ref())));
            }
            Some(k) => *k.get_ref() as usize,
            None => 300,
        };

        let p = raw.prior.get_ref();
        let prior_span = raw.prior.span();
        let prior = match p.family {
            PriorFamily::Gaussian => {
                if let Some(d) = &p.delta {
                    return Err(at(d.span(), "`delta` is only valid for rect priors".into()));
                }
                let sigma = p
                    .sigma
                    .as_ref()
                    .ok_or_else(|| at(prior_span.clone(), "gaussian prior requires `sigma`".into()))?;
                if !(*sigma.get_ref() > 0.0) {
                    return Err(at(sigma.span(), format!("sigma = {} must be positive", sigma.get_ref())));
                }
                let rho = match &p.rho {
                    Some(r) if !(r.get_ref().abs() < 1.0) => {
                        return Err(at(r.span(), format!("rho = {} must satisfy |rho| < 1", r.get_ref())));
                    }
                    Some(r) => *r.get_ref(),
                    None => 0.0,
                };
                PriorConfig::gaussian(p.mu, *sigma.get_ref(), rho)
            }
            PriorFamily::Rect => {
                if let Some(s) = p.sigma.as_ref().or(p.rho.as_ref()) {
                    return Err(at(s.span(), "rect prior takes only `mu` and `delta`".into()));
                }
                let delta = p
                    .delta
                    .as_ref()
                    .ok_or_else(|| at(prior_span.clone(), "rect prior requires `delta`".into()))?;
                if !(*delta.get_ref() > 0.0) {
                    return Err(at(delta.span(), format!("delta = {} must be positive", delta.get_ref())));
                }
                PriorConfig::rect(p.mu, *delta.get_ref())
            }
        };

        let interferometer = match &raw.interferometer {
            None => InterferometerSpec::dft(),
            Some(table) => {
                let t = table.get_ref();
                let parsed = match t.get("file") {
                    Some(toml::Value::String(file)) if t.len() == 1 => {
                        InterferometerSpec::from_path(&base_dir.join(file))
                    }
                    Some(_) if t.len() == 1 => {
                        return Err(at(table.span(), "interferometer.file must be a string".into()));
                    }
                    _ => InterferometerSpec::from_toml_str(&t.to_string()),
                };
                parsed.map_err(|e| at(table.span(), format!("interferometer: {e}")))?
            }
        };

        let spec = ExperimentSpec {
            config_id: raw.config_id.unwrap_or_else(|| "run".into()),
            interferometer,
            prior,
            n_schedule: schedule.clone(),
            k,
            master_seed: raw.master_seed.unwrap_or(DEFAULT_SEED),
            truth_mode: raw.truth_mode,
            bounds: raw.bounds,
            zz: raw.zz,
            particles: raw.particles,
        };
        // Remaining range checks (particle and quadrature settings) carry no
        // span information.
        spec.particles
            .resample()
            .validate()
            .and_then(|_| spec.zz.validate())
            .map_err(|e| CliError::Config(e.to_string()))?;
        if spec.particles.count < 2 {
            return Err(CliError::Config("particles.count must be >= 2".into()));
        }
        Ok(RunConfig {
            spec,
            output: raw.output,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
