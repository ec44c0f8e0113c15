//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test --release -p multiphase-cli --test acceptance`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use multiphase_core::bounds::{min_error_probability, zz_total_variance};
use multiphase_core::experiments::{
    n1_gap_grid, records_from_csv, sweep_rho, sweep_sigma, AggregateRecord, ExperimentSpec, RhoRule,
};
use multiphase_core::interferometer::{fisher_correlation, fisher_matrix, likelihood, sample_outcome};
use multiphase_core::particle::{filter_outcomes, ResampleParams, DEFAULT_PARTICLES};
use multiphase_core::priors::{density, prior_information_matrix, prior_information_quadrature, sample};
use multiphase_core::{BoundToggles, InterferometerSpec, OutcomeDistribution, PhasePair, Prior, PriorConfig, ZZSettings};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_multiphase");
const SEED: &str = "20240611";
const MU: [f64; 2] = [1.1, 2.0];

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, ok: bool, detail: String) {
        let line = format!("[{}] {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        // bypasses the test harness capture so the lines always show
        let mut out = std::io::stdout();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        self.lines.push((ok, line));
    }
}

fn reproduce(figure: &str, threads: usize, out: &Path) {
    let status = Command::new(BIN)
        .args(["reproduce", figure, "desk", "--seed", SEED, "--threads", &threads.to_string(), "--out"])
        .arg(out)
        .status()
        .unwrap();
    assert!(status.success(), "reproduce {figure} failed: {status}");
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn curves(dir: &Path) -> BTreeMap<String, Vec<AggregateRecord>> {
    data_files(dir)
        .into_iter()
        .filter(|(name, _)| name.ends_with(".csv"))
        .map(|(name, bytes)| {
            let records = records_from_csv(std::str::from_utf8(&bytes).unwrap()).unwrap();
            (name.trim_end_matches(".csv").to_string(), records)
        })
        .collect()
}

/// Criterion 1 on one family of curves: returns violations.
fn bound_violations(curves: &BTreeMap<String, Vec<AggregateRecord>>, with_vt: bool) -> Vec<String> {
    let mut bad = Vec::new();
    for (id, recs) in curves {
        for r in recs {
            let top = r.v_mean + 2.0 * r.v_stderr;
            let zz = r.v_zz.expect("zz column");
            if top < zz {
                bad.push(format!("{id} n={} v+2se={top:.5} < zz={zz:.5}", r.n));
            }
            if with_vt {
                let vt = r.v_vt.expect("vt column");
                if top < vt {
                    bad.push(format!("{id} n={} v+2se={top:.5} < vt={vt:.5}", r.n));
                }
            } else if r.v_vt.is_some() {
                bad.push(format!("{id} n={} has a vt value", r.n));
            }
        }
    }
    bad
}

fn pe_by_strings(p0: [f64; 3], p1: [f64; 3], pi0: f64, n: usize) -> f64 {
    let mut l1 = 0.0;
    for code in 0..3usize.pow(n as u32) {
        let (mut a, mut b, mut c) = (1.0, 1.0, code);
        for _ in 0..n {
            a *= p0[c % 3];
            b *= p1[c % 3];
            c /= 3;
        }
        l1 += (pi0 * a - (1.0 - pi0) * b).abs();
    }
    0.5 * (1.0 - l1)
}

fn criterion_6(report: &mut Report) {
    // (a) multinomial error probability against 3^N strings
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut dist = || {
        let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        let s: f64 = raw.iter().sum();
        raw.map(|x| x / s)
    };
    let mut worst_pe: f64 = 0.0;
    for _ in 0..50 {
        let (p0, p1) = (dist(), dist());
        for n in 1..=6 {
            let got = min_error_probability(
                &OutcomeDistribution::new(p0).unwrap(),
                &OutcomeDistribution::new(p1).unwrap(),
                0.5,
                n,
            );
            worst_pe = worst_pe.max((got - pe_by_strings(p0, p1, 0.5, n)).abs());
        }
    }
    report.record("C6a", worst_pe <= 1e-12, format!("max |P_e - enumeration| = {worst_pe:.2e} (tol 1e-12)"));

    // (b) particle filter against a 400×400 grid posterior, N = 20
    let spec = InterferometerSpec::dft();
    let sigma = 0.25;
    let prior = Prior::gaussian(MU, sigma, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(620);
    let truth = sample(&prior, &mut rng);
    let d = likelihood(&spec, PhasePair::from(truth));
    let outcomes: Vec<usize> = (0..20).map(|_| sample_outcome(&d, &mut rng)).collect();
    let traj = filter_outcomes(&spec, &prior, &outcomes, DEFAULT_PARTICLES, &ResampleParams::default(), &mut rng).unwrap();
    let last = traj.last().unwrap();
    let cells = 400;
    let h = 10.0 * sigma / cells as f64;
    let mut pts = Vec::with_capacity(cells * cells);
    for i in 0..cells {
        for j in 0..cells {
            let x = MU[0] - 5.0 * sigma + (i as f64 + 0.5) * h;
            let y = MU[1] - 5.0 * sigma + (j as f64 + 0.5) * h;
            let p = spec.probs_at(x, y);
            let lw = density(&prior, [x, y]).ln() + outcomes.iter().map(|&o| p[o].ln()).sum::<f64>();
            pts.push((x, y, lw));
        }
    }
    let top = pts.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = pts.iter().map(|p| (p.2 - top).exp()).sum();
    let m1: f64 = pts.iter().map(|p| (p.2 - top).exp() * p.0).sum::<f64>() / z;
    let m2: f64 = pts.iter().map(|p| (p.2 - top).exp() * p.1).sum::<f64>() / z;
    let tr: f64 = pts
        .iter()
        .map(|p| (p.2 - top).exp() * ((p.0 - m1).powi(2) + (p.1 - m2).powi(2)))
        .sum::<f64>()
        / z;
    let dmean = (last.phi_hat[0] - m1).abs().max((last.phi_hat[1] - m2).abs());
    let dtr = (last.total_variance() - tr).abs() / tr;
    report.record(
        "C6b",
        dmean < 0.02 && dtr < 0.10,
        format!("filter vs grid: max |Δφ̂| = {dmean:.4} rad (tol 0.02), |ΔTr Σ|/Tr Σ = {dtr:.4} (tol 0.10)"),
    );

    // (c) prior information by quadrature
    let mut worst_info: f64 = 0.0;
    for rho in [0.0, 0.25, -0.25, 0.4] {
        let p = Prior::gaussian(MU, 0.25, rho).unwrap();
        let exact = prior_information_matrix(&p).unwrap();
        let quad = prior_information_quadrature(&p, 8.0, 1e-10).unwrap();
        worst_info = worst_info.max(quad.max_abs_diff(&exact) / exact.frobenius());
    }
    report.record("C6c", worst_info < 1e-3, format!("prior information rel. error {worst_info:.2e} (tol 1e-3)"));

    // (d) Fisher information against central differences
    let mut rng = ChaCha8Rng::seed_from_u64(64);
    let mut worst_f: f64 = 0.0;
    let hstep = 1e-5;
    for _ in 0..100 {
        let (a, b) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0..std::f64::consts::TAU));
        let p = spec.probs_at(a, b);
        let f = fisher_matrix(&spec, PhasePair::new(a, b));
        let mut fd = [[0.0; 2]; 2];
        for x in 0..3 {
            if p[x] < 1e-12 {
                continue;
            }
            let g = [
                (spec.probs_at(a + hstep, b)[x] - spec.probs_at(a - hstep, b)[x]) / (2.0 * hstep),
                (spec.probs_at(a, b + hstep)[x] - spec.probs_at(a, b - hstep)[x]) / (2.0 * hstep),
            ];
            for i in 0..2 {
                for j in 0..2 {
                    fd[i][j] += g[i] * g[j] / p[x];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                worst_f = worst_f.max((f.get(i, j) - fd[i][j]).abs());
            }
        }
    }
    report.record("C6d", worst_f < 1e-4, format!("max |F - F_fd| = {worst_f:.2e} (tol 1e-4)"));
}

#[test]
fn acceptance() {
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&work);
    let mut report = Report { lines: Vec::new() };
    let spec = InterferometerSpec::dft();

    // Criterion 8 first: its first run also provides the Fig. 3 data.
    let (one, four) = (work.join("t1"), work.join("t4"));
    reproduce("fig3", 1, &one);
    reproduce("fig3", 4, &four);
    let (a, b) = (data_files(&one.join("fig3")), data_files(&four.join("fig3")));
    let differing: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
    report.record(
        "C8",
        a.len() == b.len() && differing.is_empty() && a.len() == 5,
        format!("reproduce fig3 desk at 1 and 4 threads: {} files, differing {differing:?}", a.len()),
    );

    // Criterion 1: bound validity on the Fig. 3 and Fig. 6 analogs
    let fig3 = curves(&one.join("fig3"));
    reproduce("fig6", 1, &work.join("t1"));
    let fig6 = curves(&work.join("t1").join("fig6"));
    let mut bad = bound_violations(&fig3, true);
    bad.extend(bound_violations(&fig6, false));
    let points: usize = fig3.values().chain(fig6.values()).map(|r| r.len()).sum();
    report.record(
        "C1",
        bad.is_empty() && points == 6 * 7,
        format!("{points} (config, N) points; violations: {bad:?}"),
    );

    // Criterion 2: VT/ZZ ordering at large N, ρ = 0
    let rho0 = &fig3["fig3_rho0"];
    let mut c2 = Vec::new();
    for n in [50, 100] {
        let r = rho0.iter().find(|r| r.n == n).unwrap();
        let (vt, zz) = (r.v_vt.unwrap(), r.v_zz.unwrap());
        c2.push((n, vt, zz, (vt - zz) / vt));
    }
    report.record(
        "C2",
        c2.iter().all(|c| c.3 >= -0.05),
        c2.iter()
            .map(|(n, vt, zz, rel)| format!("N={n}: vt={vt:.5} zz={zz:.5} (vt-zz)/vt={rel:.4}"))
            .collect::<Vec<_>>()
            .join("; ")
            + " (need >= -0.05)",
    );

    // Criterion 3: N = 1 tightness on a 3×3 grid, matched correlation
    let base3 = ExperimentSpec {
        prior: PriorConfig::gaussian(MU, 0.2, 0.0),
        k: 300,
        master_seed: 3,
        ..ExperimentSpec::baseline("c3", vec![1])
    };
    let cells = n1_gap_grid(&base3, &[0.8, 1.1, 1.4], &[1.7, 2.0, 2.3], RhoRule::Matched).unwrap();
    let max_gap = cells.iter().map(|c| c.gap).fold(f64::NEG_INFINITY, f64::max);
    let low: Vec<String> = cells
        .iter()
        .filter(|c| c.gap < -2.0 * c.gap_stderr)
        .map(|c| format!("μ=({}, {}) gap={:.4} se={:.4}", c.mu[0], c.mu[1], c.gap, c.gap_stderr))
        .collect();
    report.record(
        "C3",
        cells.len() == 9 && max_gap <= 0.10 && low.is_empty(),
        format!("max gap {max_gap:.4} (tol 0.10); gaps below -2se: {low:?}"),
    );

    // Criterion 4: matched correlation optimal at N = 20
    let nu = fisher_correlation(&fisher_matrix(&spec, PhasePair::new(MU[0], MU[1]))).unwrap();
    let base4 = ExperimentSpec {
        bounds: BoundToggles {
            crb: false,
            vt: false,
            zz: false,
        },
        master_seed: 4,
        ..ExperimentSpec::baseline("c4", vec![20])
    };
    let sweep = sweep_rho(&base4, &[nu, -0.4, 0.0, 0.4]).unwrap();
    let matched = &sweep[0].records[0];
    let mut c4 = Vec::new();
    let mut ok4 = true;
    for c in &sweep[1..] {
        let r = &c.records[0];
        let se = (matched.v_stderr.powi(2) + r.v_stderr.powi(2)).sqrt();
        ok4 &= matched.v_mean <= r.v_mean + 2.0 * se;
        c4.push(format!("ρ={}: {:.5}±{:.5}", c.param, r.v_mean, r.v_stderr));
    }
    report.record(
        "C4",
        ok4,
        format!("ρ=ν={nu:.4}: {:.5}±{:.5} vs {}", matched.v_mean, matched.v_stderr, c4.join(", ")),
    );

    // Criterion 5: width monotonicity at N = 50
    let base5 = ExperimentSpec {
        k: 100,
        master_seed: 5,
        bounds: BoundToggles {
            crb: false,
            vt: true,
            zz: true,
        },
        ..ExperimentSpec::baseline("c5", vec![50])
    };
    let widths = sweep_sigma(&base5, &[0.2, 0.25, 0.3, 0.35, 0.4], 0).unwrap();
    let rows: Vec<&AggregateRecord> = widths.curves.iter().map(|c| &c.records[0]).collect();
    let ok5 = rows.windows(2).all(|w| {
        let se = (w[0].v_stderr.powi(2) + w[1].v_stderr.powi(2)).sqrt();
        w[1].v_mean + 2.0 * se > w[0].v_mean
            && w[1].v_vt.unwrap() > w[0].v_vt.unwrap()
            && w[1].v_zz.unwrap() > w[0].v_zz.unwrap()
    });
    report.record(
        "C5",
        ok5,
        widths
            .curves
            .iter()
            .map(|c| {
                let r = &c.records[0];
                format!("σ={}: v={:.5} vt={:.5} zz={:.5}", c.param, r.v_mean, r.v_vt.unwrap(), r.v_zz.unwrap())
            })
            .collect::<Vec<_>>()
            .join("; "),
    );

    criterion_6(&mut report);

    // Criterion 7: refined ZZ quadrature
    let prior = Prior::gaussian(MU, 0.25, 0.0).unwrap();
    let refined = ZZSettings::default().refined();
    let mut c7 = Vec::new();
    for n in [1, 10, 100] {
        let coarse = rho0.iter().find(|r| r.n == n).unwrap().v_zz.unwrap();
        let fine = zz_total_variance(&spec, &prior, n, &refined, None).unwrap().v_zz.unwrap();
        c7.push((n, coarse, fine, (fine - coarse).abs() / coarse));
    }
    report.record(
        "C7",
        c7.iter().all(|c| c.3 < 0.01),
        c7.iter()
            .map(|(n, a, b, rel)| format!("N={n}: {a:.6} -> {b:.6} ({rel:.2e})"))
            .collect::<Vec<_>>()
            .join("; ")
            + " (tol 1e-2)",
    );

    let failed: Vec<&String> = report.lines.iter().filter(|l| !l.0).map(|l| &l.1).collect();
    assert!(failed.is_empty(), "{} criteria failed:\n{}", failed.len(), failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
