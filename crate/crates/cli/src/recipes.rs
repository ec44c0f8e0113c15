//! Built-in studies behind `multiphase reproduce`.

use std::fmt;
use std::str::FromStr;

use multiphase_core::experiments::{ExperimentSpec, RhoRule};
use multiphase_core::{BoundToggles, PriorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Variance against N for several prior correlations.
    Fig3,
    /// Single-probe gap grids for three correlation rules.
    Fig4,
    /// Prior-width sweep with final particle clouds.
    Fig5,
    /// Rectangular priors, Ziv-Zakai only.
    Fig6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Full,
    /// At most 100 probes and 100 runs.
    Desk,
}

impl FromStr for Figure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            _ => Err(format!("unknown figure `{s}` (fig3|fig4|fig5|fig6)")),
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        })
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Scale::Full),
            "desk" => Ok(Scale::Desk),
            _ => Err(format!("unknown scale `{s}` (full|desk)")),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Full => "full",
            Scale::Desk => "desk",
        })
    }
}

pub const PRIOR_MEAN: [f64; 2] = [1.1, 2.0];
pub const FIG3_RHOS: [f64; 4] = [0.0, 0.25, -0.25, 0.4];
pub const FIG5_SIGMAS: [f64; 5] = [0.2, 0.25, 0.3, 0.35, 0.4];
pub const FIG6_DELTAS: [f64; 2] = [0.4, 0.6];
pub const FIG4_RULES: [RhoRule; 3] = [RhoRule::Matched, RhoRule::Zero, RhoRule::Anti];
pub const CLOUD_RUNS: usize = 20;

impl Scale {
    pub fn n_schedule(&self) -> Vec<usize> {
        match self {
            Scale::Full => vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000],
            Scale::Desk => vec![1, 2, 5, 10, 20, 50, 100],
        }
    }

    pub fn runs(&self) -> usize {
        match self {
            Scale::Full => 300,
            Scale::Desk => 100,
        }
    }

    /// Prior-mean grid of the gap study.
    pub fn mu_grid(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Scale::Full => (vec![0.5, 0.8, 1.1, 1.4, 1.7], vec![1.4, 1.7, 2.0, 2.3, 2.6]),
            Scale::Desk => (vec![0.8, 1.1, 1.4], vec![1.7, 2.0, 2.3]),
        }
    }
}

/// Base experiment of a figure; the sweep parameter is filled in by the
/// corresponding study.
pub fn base_spec(figure: Figure, scale: Scale, seed: u64) -> ExperimentSpec {
    let mut spec = ExperimentSpec::baseline(&figure.to_string(), scale.n_schedule());
    spec.k = scale.runs();
    spec.master_seed = seed;
    match figure {
        Figure::Fig3 | Figure::Fig5 => {}
        Figure::Fig4 => {
            spec.prior = PriorConfig::gaussian(PRIOR_MEAN, 0.2, 0.0);
            spec.n_schedule = vec![1];
        }
        Figure::Fig6 => {
            spec.prior = PriorConfig::rect(PRIOR_MEAN, FIG6_DELTAS[0]);
            spec.bounds = BoundToggles {
                crb: false,
                vt: false,
                zz: true,
            };
        }
    }
    spec
}
