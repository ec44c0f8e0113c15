use std::fs;
use std::path::{Path, PathBuf};

use multiphase_core::experiments::{
    self, export_bounds, export_clouds, export_records, Curve, ExperimentSpec, ExportFormat, GapCell,
};
use multiphase_core::bounds::bounds_over_schedule;
use multiphase_core::VERSION;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::recipes::{self, base_spec, Figure, Scale};
use crate::CliError;

/// Files written by a command, relative to its output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

fn ext(format: ExportFormat) -> &'static str {
    match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| multiphase_core::Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| multiphase_core::Error::io(path, e).into())
}

fn write_manifest(dir: &Path, mut body: Value, files: &mut Vec<String>) -> Result<(), CliError> {
    files.sort();
    body["artifact"] = json!("multiphase");
    body["version"] = json!(VERSION);
    body["files"] = json!(files);
    let mut bytes = serde_json::to_vec_pretty(&body).expect("manifest serializes");
    bytes.push(b'\n');
    write(&dir.join("manifest.json"), &bytes)
}

fn spec_value(spec: &ExperimentSpec) -> Value {
    serde_json::to_value(spec).expect("spec serializes")
}

/// Evaluates the bounds over the config's schedule.
pub fn cmd_bounds(cfg: &RunConfig, out: &Path, format: ExportFormat) -> Result<Outputs, CliError> {
    let spec = &cfg.spec;
    let prior = spec.prior.build()?;
    let records = bounds_over_schedule(&spec.interferometer, &prior, &spec.n_schedule, spec.bounds, &spec.zz)?;
    let name = format!("bounds.{}", ext(format));
    export_bounds(&records, &spec.zz, &out.join(&name), format)?;
    let mut files = vec![name];
    write_manifest(
        out,
        json!({ "command": "bounds", "master_seed": spec.master_seed, "config": spec_value(spec) }),
        &mut files,
    )?;
    Ok(Outputs {
        dir: out.to_path_buf(),
        files,
    })
}

/// Runs the Monte Carlo study of the config.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path, format: ExportFormat) -> Result<Outputs, CliError> {
    let spec = &cfg.spec;
    let (records, clouds) = experiments::run_monte_carlo_with_clouds(spec, cfg.output.clouds)?;
    let name = format!("records.{}", ext(format));
    export_records(spec, &records, &out.join(&name), format)?;
    let mut files = vec![name];
    if !clouds.is_empty() {
        export_clouds(&clouds, &out.join("clouds.csv"))?;
        files.push("clouds.csv".into());
    }
    write_manifest(
        out,
        json!({ "command": "simulate", "master_seed": spec.master_seed, "config": spec_value(spec) }),
        &mut files,
    )?;
    Ok(Outputs {
        dir: out.to_path_buf(),
        files,
    })
}

fn curve_files(out: &Path, curves: &[Curve], format: ExportFormat, files: &mut Vec<String>) -> Result<(), CliError> {
    for c in curves {
        let name = format!("{}.{}", c.spec.config_id, ext(format));
        export_records(&c.spec, &c.records, &out.join(&name), format)?;
        files.push(name);
    }
    Ok(())
}

fn gap_table(cells: &[GapCell], format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Csv => {
            let mut s = String::from("mu1,mu2,nu,rho,v_mean,v_stderr,v_zz,gap,gap_stderr\n");
            for c in cells {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    c.mu[0], c.mu[1], c.nu, c.rho, c.v_mean, c.v_stderr, c.v_zz, c.gap, c.gap_stderr
                ));
            }
            s.into_bytes()
        }
        ExportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(&json!({ "version": VERSION, "cells": cells })).expect("cells serialize");
            v.push(b'\n');
            v
        }
    }
}

/// Reruns one of the built-in studies into `out/<figure>/`.
pub fn cmd_reproduce(
    figure: Figure,
    scale: Scale,
    seed: u64,
    out: &Path,
    format: ExportFormat,
) -> Result<Outputs, CliError> {
    let dir = out.join(figure.to_string());
    let base = base_spec(figure, scale, seed);
    let mut files = Vec::new();
    let mut manifest = json!({
        "command": "reproduce",
        "figure": figure.to_string(),
        "scale": scale.to_string(),
        "master_seed": seed,
        "base": spec_value(&base),
    });

    match figure {
        Figure::Fig3 => {
            let curves = experiments::sweep_rho(&base, &recipes::FIG3_RHOS)?;
            curve_files(&dir, &curves, format, &mut files)?;
            manifest["rho"] = json!(recipes::FIG3_RHOS);
        }
        Figure::Fig4 => {
            let (mu1, mu2) = scale.mu_grid();
            for rule in recipes::FIG4_RULES {
                let cells = experiments::n1_gap_grid(&base, &mu1, &mu2, rule)?;
                let rule_name = serde_json::to_value(rule).expect("rule serializes");
                let name = format!("gaps_{}.{}", rule_name.as_str().unwrap_or("rule"), ext(format));
                write(&dir.join(&name), &gap_table(&cells, format))?;
                files.push(name);
            }
            manifest["mu1"] = json!(mu1);
            manifest["mu2"] = json!(mu2);
            manifest["rules"] = json!(recipes::FIG4_RULES);
        }
        Figure::Fig5 => {
            let sweep = experiments::sweep_sigma(&base, &recipes::FIG5_SIGMAS, recipes::CLOUD_RUNS)?;
            curve_files(&dir, &sweep.curves, format, &mut files)?;
            export_clouds(&sweep.clouds, &dir.join("clouds.csv"))?;
            files.push("clouds.csv".into());
            manifest["sigma"] = json!(recipes::FIG5_SIGMAS);
        }
        Figure::Fig6 => {
            let report = experiments::rect_prior_run(&base, &recipes::FIG6_DELTAS)?;
            curve_files(&dir, &report.curves, format, &mut files)?;
            manifest["delta"] = json!(recipes::FIG6_DELTAS);
            manifest["vt_note"] = json!(report.vt_note);
        }
    }
    write_manifest(&dir, manifest, &mut files)?;
    Ok(Outputs { dir, files })
}
