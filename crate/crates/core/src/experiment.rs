//! Runs a resolved configuration and writes its result tables.
//!
//! Every experiment writes `summary.json` (with the explicit configuration
//! under `config`) and `resolved.toml` (the same configuration as a loadable
//! document). On top of that:
//!
//! | experiment       | file             | columns / fields |
//! |------------------|------------------|------------------|
//! | `simulate`       | `orders.csv`     | `order, elastic_weight, anti_stokes_weight, detector_cone_weight` |
//! | `scan_spectrum`  | `spectrum.csv`   | `delta_c, b0, elastic, anti_stokes, sum, diverged` |
//! | `scan_threshold` | `threshold.json` | the [`ThresholdReport`] fields |
//! | `validate`       | `validation.json`| one record per check |
//!
//! Weights are per launched photon. CSV numbers carry 17 significant
//! digits; missing values (diverged spectrum points) are empty cells.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    bump_amplitudes, classify_stability, mean_scattering_order, spectral_scan, threshold_scan,
    SpectralScanTable, StabilityReport, ThresholdReport,
};
use crate::config::{ConfigFile, ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::transport::Tally;
use crate::validate::{run_suite, CheckResult};

/// What a finished experiment reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// 0 on success, 1 when a run overflowed or a validation check failed.
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable lines for the terminal.
    pub lines: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    experiment: ExperimentKind,
    seed: u64,
    n_photons: u64,
    b0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    preset: Option<&'a str>,
    artifact_defaults: &'a [String],
    results: T,
    config: ConfigFile,
}

#[derive(Serialize)]
struct SimulateResults<'a> {
    photons_launched: u64,
    escaped_total: f64,
    escaped_elastic: f64,
    escaped_anti_stokes: f64,
    detector_cone: f64,
    truncated_weight: f64,
    truncated_count: u64,
    mean_scattering_order: Option<f64>,
    stability: &'a StabilityReport,
}

#[derive(Serialize)]
struct SpectrumResults {
    rows: usize,
    diverged_points: usize,
    bump_amplitudes: Vec<(f64, Option<f64>)>,
}

#[derive(Serialize)]
struct ValidateResults<'a> {
    passed: usize,
    failed: usize,
    checks: &'a [CheckResult],
}

/// Runs `cfg` and writes its outputs into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    fs::create_dir_all(&cfg.output_dir)?;
    let mut out = Outcome {
        exit_code: 0,
        files: Vec::new(),
        lines: Vec::new(),
    };
    match cfg.experiment {
        ExperimentKind::Simulate => simulate(cfg, &mut out)?,
        ExperimentKind::ScanSpectrum => scan_spectrum(cfg, &mut out)?,
        ExperimentKind::ScanThreshold => scan_threshold(cfg, &mut out)?,
        ExperimentKind::Validate => validate(cfg, &mut out)?,
    }
    let resolved = cfg.output_dir.join("resolved.toml");
    fs::write(&resolved, cfg.echo_toml())?;
    out.files.push(resolved);
    Ok(out)
}

fn write_summary<T: Serialize>(
    cfg: &ExperimentConfig,
    results: T,
    out: &mut Outcome,
) -> Result<()> {
    let summary = Summary {
        experiment: cfg.experiment,
        seed: cfg.scenario.run.seed,
        n_photons: cfg.scenario.run.n_photons,
        b0: cfg.b0(),
        preset: cfg.preset.as_deref(),
        artifact_defaults: &cfg.artifact_defaults,
        results,
        config: cfg.echo(),
    };
    let path = cfg.output_dir.join("summary.json");
    write_json(&path, &summary)?;
    out.files.push(path);
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn simulate(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let tally = cfg.scenario.simulate()?;
    let stability = classify_stability(&tally, &cfg.stability);
    let path = cfg.output_dir.join("orders.csv");
    write_orders(&path, &tally)?;
    out.files.push(path);
    let norm = tally.photons_launched as f64;
    let results = SimulateResults {
        photons_launched: tally.photons_launched,
        escaped_total: tally.total_escaped() / norm,
        escaped_elastic: tally.elastic.total() / norm,
        escaped_anti_stokes: tally.anti_stokes.total() / norm,
        detector_cone: (tally.elastic.detector_total() + tally.anti_stokes.detector_total()) / norm,
        truncated_weight: tally.truncated_weight / norm,
        truncated_count: tally.truncated_count,
        mean_scattering_order: mean_scattering_order(&tally).ok(),
        stability: &stability,
    };
    out.lines.push(format!(
        "escaped {:.6} per photon, q = {}, verdict {:?}, truncated fraction {:.4}",
        results.escaped_total,
        stability
            .q
            .zip(stability.q_err)
            .map_or("n/a".into(), |(q, e)| format!("{q:.5} +/- {e:.5}")),
        stability.verdict,
        stability.truncated_fraction,
    ));
    if tally.diverged {
        out.lines
            .push("weight overflow cap hit: the run diverged".into());
        out.exit_code = 1;
    }
    write_summary(cfg, results, out)
}

/// Per-order escaped weight per launched photon, both channels and the
/// detector cone.
pub fn write_orders(path: &Path, tally: &Tally) -> Result<()> {
    let norm = tally.photons_launched.max(1) as f64;
    let at = |v: &[f64], n: usize| v.get(n).copied().unwrap_or(0.0);
    let rows = tally
        .elastic
        .by_order
        .len()
        .max(tally.anti_stokes.by_order.len());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "order",
        "elastic_weight",
        "anti_stokes_weight",
        "detector_cone_weight",
    ])?;
    for n in 0..rows {
        let detector = at(&tally.elastic.detector, n) + at(&tally.anti_stokes.detector, n);
        w.write_record([
            n.to_string(),
            fmt_f64(at(&tally.elastic.by_order, n) / norm),
            fmt_f64(at(&tally.anti_stokes.by_order, n) / norm),
            fmt_f64(detector / norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn scan_spectrum(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let plan = &cfg.spectrum;
    let table = spectral_scan(
        &cfg.scenario,
        &plan.b0,
        &plan.delta_c,
        plan.observation,
        &cfg.stability,
    )?;
    let path = cfg.output_dir.join("spectrum.csv");
    write_spectrum(&path, &table)?;
    out.files.push(path);
    let bumps = bump_amplitudes(&table);
    for (b0, bump) in &bumps {
        out.lines.push(format!(
            "b0 = {b0}: bump amplitude {}",
            bump.map_or("n/a (diverged)".into(), |b| format!("{b:.6}"))
        ));
    }
    let results = SpectrumResults {
        rows: table.rows.len(),
        diverged_points: table.rows.iter().filter(|r| r.diverged).count(),
        bump_amplitudes: bumps,
    };
    write_summary(cfg, results, out)
}

pub fn write_spectrum(path: &Path, table: &SpectralScanTable) -> Result<()> {
    let cell = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["delta_c", "b0", "elastic", "anti_stokes", "sum", "diverged"])?;
    for r in &table.rows {
        w.write_record([
            fmt_f64(r.delta_c),
            fmt_f64(r.b0),
            cell(r.elastic),
            cell(r.anti_stokes),
            cell(r.sum),
            r.diverged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn scan_threshold(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let plan = &cfg.threshold;
    let report: ThresholdReport =
        threshold_scan(&cfg.scenario, plan.param, plan.bracket, &plan.options)?;
    let path = cfg.output_dir.join("threshold.json");
    write_json(&path, &report)?;
    out.files.push(path);
    out.lines.push(format!(
        "critical {:?} = {:.6} in [{:.6}, {:.6}]",
        report.scan_param, report.critical_value, report.bracket.0, report.bracket.1
    ));
    if let (Some(a), Some(gap)) = (report.analytic_letokhov, report.relative_gap) {
        out.lines.push(format!(
            "diffusion estimate {a:.6}, relative gap {:+.2}%",
            100.0 * gap
        ));
    }
    write_summary(cfg, &report, out)
}

fn validate(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let checks = run_suite(cfg.scenario.run.seed, cfg.scenario.run.workers);
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        out.lines.push(format!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        ));
    }
    let path = cfg.output_dir.join("validation.json");
    write_json(&path, &checks)?;
    out.files.push(path);
    if failed > 0 {
        out.exit_code = 1;
    }
    write_summary(
        cfg,
        ValidateResults {
            passed: checks.len() - failed,
            failed,
            checks: &checks,
        },
        out,
    )
}
