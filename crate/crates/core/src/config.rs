//! Experiment configuration files.
//!
//! A configuration is a TOML document with optional top-level keys
//! `experiment`, `output_dir` and `preset` and the tables `[medium]`,
//! `[spectral]`, `[run]`, `[scan]`, `[threshold]` and `[analysis]`. Every
//! key is optional and unknown keys are rejected. Values are layered as
//! built-in defaults, then the preset, then the file, and the result is
//! resolved into the runtime types. [`ExperimentConfig::echo`] gives the
//! fully explicit form of a resolved configuration; loading the echo
//! reproduces the same experiment.
//!
//! The defaults (see the field docs) describe a passive uniform sphere of
//! optical depth 10 probed with 10^5 photons from a central dipole source.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::analysis::{
    Observation, ScanParam, Scenario, SeriesSource, StabilityOptions, ThresholdOptions, Tolerance,
};
use crate::error::{Error, Result};
use crate::medium::{ChannelGeometry, CloudGeometry, CloudShape, Medium};
use crate::spectral::{BetaMode, SpectralModel};
use crate::transport::{PhaseFunction, RunConfig, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    ScanSpectrum,
    ScanThreshold,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    UniformSphere,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaModeKind {
    Constant,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationKind {
    AllAngles,
    PolarBin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceKind {
    Relative,
    Absolute,
}

/// The document as written. `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    /// Default `simulate`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    /// Default `out`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub medium: MediumSection,
    pub spectral: SpectralSection,
    pub run: RunSection,
    pub scan: ScanSection,
    pub threshold: ThresholdSection,
    pub analysis: AnalysisSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumSection {
    /// Default `uniform_sphere`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeKind>,
    /// Through-centre resonant optical depth. Default 10 unless `radius`
    /// is given; the two are mutually exclusive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<f64>,
    /// Sphere radius, or `sigma_r` of a Gaussian cloud.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Gaussian truncation radius in units of `sigma_r`. Default 4.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff_sigmas: Option<f64>,
    /// Peak density. Default 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n0: Option<f64>,
    /// Gain channel radius. Default 0 (no channel).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_radius: Option<f64>,
    /// Gain channel radius as a fraction of `radius`; excludes
    /// `channel_radius`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel_fraction: Option<f64>,
    /// Gain and scattering everywhere in the cloud. Default false.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_gain: Option<bool>,
    /// Fraction of atoms that scatter. Default 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trap_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralSection {
    /// Default 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Default 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    /// Pump parameter 2V. Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_2v: Option<f64>,
    /// Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<f64>,
    /// Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_kappa: Option<f64>,
    /// Default 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_width: Option<f64>,
    /// Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    /// Default `constant`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_mode: Option<BetaModeKind>,
    /// Width of the Lorentzian branching profile. Default 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_width: Option<f64>,
    /// Detuning of the emitted light. Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emission_detuning: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Default 100000.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_photons: Option<u64>,
    /// Default 400.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_order: Option<u32>,
    /// Default 1e-4.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_min: Option<f64>,
    /// Default 0.1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roulette_survive: Option<f64>,
    /// Radians. Default 0.1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector_half_angle: Option<f64>,
    /// Default `dipole`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_function: Option<PhaseFunction>,
    /// Default 1. Must fit in a signed 64-bit integer.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Default `center_point_dipole`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceKind>,
    /// Default: all available cores. Never echoed, since results do not
    /// depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Optical depths of the spectral scan. Default: the cloud's own.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<Vec<f64>>,
    /// Explicit detuning grid; excludes the range keys below.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<Vec<f64>>,
    /// Default -10.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_c_min: Option<f64>,
    /// Default 10.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_c_max: Option<f64>,
    /// Default 21.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_c_points: Option<usize>,
    /// Default `all_angles`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationKind>,
    /// Polar angle from the polarization axis for `polar_bin`. Default 45.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdSection {
    /// Default `pump_rabi`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param: Option<ScanParam>,
    /// Converging end of the bracket. Default 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    /// Diverging end of the bracket. Default 100.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// Default 0.05.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Default `relative`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_kind: Option<ToleranceKind>,
    /// Default 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_retries: Option<u32>,
    /// Extrapolated boundary in the analytic threshold. Default true.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrapolation: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Default `elastic`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesSource>,
    /// Default 100.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_count: Option<u64>,
    /// Default 2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin_sigmas: Option<f64>,
    /// Default 0.5.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_truncated_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPlan {
    pub b0: Vec<f64>,
    pub delta_c: Vec<f64>,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPlan {
    pub param: ScanParam,
    pub bracket: (f64, f64),
    pub options: ThresholdOptions,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub output_dir: PathBuf,
    pub preset: Option<String>,
    pub scenario: Scenario,
    pub spectrum: SpectrumPlan,
    pub threshold: ThresholdPlan,
    pub stability: StabilityOptions,
    /// Preset keys whose values were chosen for this crate rather than
    /// taken from the experiment being modelled.
    pub artifact_defaults: Vec<String>,
}

struct Preset {
    name: &'static str,
    toml: &'static str,
    /// Keys whose values come from the modelled experiment.
    measured: &'static [&'static str],
}

const PRESETS: &[Preset] = &[
    Preset {
        name: "fig3-scan",
        toml: r#"
experiment = "scan_spectrum"
[medium]
shape = "gaussian"
b0 = 10.0
overlap_gain = true
[spectral]
rabi_2v = 1.0
gain_kappa = 0.01
gain_width = 2.0
beta0 = 0.05
beta_mode = "lorentzian"
beta_width = 2.0
[run]
n_photons = 100000
[scan]
b0 = [1.0, 5.0, 10.0, 15.0, 20.0]
delta_c_min = -10.0
delta_c_max = 10.0
delta_c_points = 21
observation = "polar_bin"
theta_deg = 45.0
"#,
        measured: &[
            "experiment",
            "scan.b0",
            "scan.observation",
            "scan.theta_deg",
        ],
    },
    Preset {
        name: "fig5-b30",
        toml: r#"
experiment = "simulate"
[medium]
shape = "uniform_sphere"
b0 = 30.0
channel_fraction = 0.1
[spectral]
rabi_2v = 30.0
gain_kappa = 1.5e-4
[run]
source = "center_point_dipole"
phase_function = "dipole"
[threshold]
param = "pump_rabi"
lo = 0.0
hi = 120.0
"#,
        measured: &[
            "experiment",
            "medium.b0",
            "spectral.rabi_2v",
            "run.source",
            "run.phase_function",
        ],
    },
    Preset {
        name: "fig5-b50",
        toml: r#"
experiment = "simulate"
[medium]
shape = "uniform_sphere"
b0 = 50.0
channel_fraction = 0.1
[spectral]
rabi_2v = 30.0
gain_kappa = 1.5e-4
[run]
source = "center_point_dipole"
phase_function = "dipole"
[threshold]
param = "pump_rabi"
lo = 0.0
hi = 120.0
"#,
        measured: &[
            "experiment",
            "medium.b0",
            "spectral.rabi_2v",
            "run.source",
            "run.phase_function",
        ],
    },
    Preset {
        name: "letokhov-validate",
        toml: r#"
experiment = "scan_threshold"
[medium]
shape = "uniform_sphere"
b0 = 40.0
overlap_gain = true
[spectral]
rabi_2v = 1.0
gain_kappa = 0.01
[run]
phase_function = "isotropic"
[threshold]
param = "gain_g0"
lo = 0.004
hi = 0.016
tol = 0.05
extrapolation = true
"#,
        measured: &[],
    },
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

/// Parses a configuration document, applying the preset it names, if any.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    load_config(text, None)
}

/// Like [`parse_config`], with `preset` overriding the document's `preset`
/// key.
pub fn load_config(text: &str, preset: Option<&str>) -> Result<ExperimentConfig> {
    let file: Table = text.parse().map_err(|e: toml::de::Error| {
        Error::config(syntax_key(text, &e), e.message().to_string())
    })?;
    let preset_name = match preset {
        Some(name) => Some(name.to_string()),
        None => match file.get("preset") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(Error::config("preset", "must be a string")),
            None => None,
        },
    };
    let (merged, artifact_defaults) = match &preset_name {
        None => (file, Vec::new()),
        Some(name) => {
            let preset = PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
                Error::config(
                    "preset",
                    format!(
                        "unknown preset `{name}`; known: {}",
                        preset_names().join(", ")
                    ),
                )
            })?;
            let base: Table = preset
                .toml
                .parse()
                .expect("built-in presets are valid TOML");
            let mut keys = Vec::new();
            leaf_keys(&base, "", &mut keys);
            let artifact = keys
                .into_iter()
                .filter(|k| !preset.measured.contains(&k.as_str()))
                .collect();
            (overlay(base, file), artifact)
        }
    };
    let raw: ConfigFile = serde_path_to_error::deserialize(Value::Table(merged)).map_err(|e| {
        let key = e.path().to_string();
        Error::config(key, e.into_inner().to_string())
    })?;
    let mut cfg = resolve(&raw)?;
    cfg.preset = preset_name;
    cfg.artifact_defaults = artifact_defaults;
    Ok(cfg)
}

/// Best guess at the key a TOML syntax error refers to.
fn syntax_key(text: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else {
        return "<document>".into();
    };
    let line_start = text[..span.start.min(text.len())]
        .rfind('\n')
        .map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    line.split('=').next().unwrap_or("").trim().to_string()
}

fn leaf_keys(table: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => leaf_keys(t, &key, out),
            _ => out.push(key),
        }
    }
}

/// Keys that override each other as a group.
const EXCLUSIVE: &[&[&str]] = &[
    &["b0", "radius"],
    &["channel_radius", "channel_fraction"],
    &["delta_c", "delta_c_min", "delta_c_max", "delta_c_points"],
];

/// `top` over `base`, table by table. Setting one key of an exclusive group
/// in `top` drops the whole group from `base`.
fn overlay(mut base: Table, top: Table) -> Table {
    for group in EXCLUSIVE {
        if group.iter().any(|k| top.contains_key(*k)) {
            for k in *group {
                base.remove(*k);
            }
        }
    }
    for (k, v) in top {
        match (base.remove(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => {
                base.insert(k, Value::Table(overlay(b, t)));
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

fn check(ok: bool, key: &str, rule: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(key, rule))
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    check(v > 0.0 && v.is_finite(), key, "must be positive and finite")
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    check(v >= 0.0 && v.is_finite(), key, "must be >= 0 and finite")
}

fn finite(key: &str, v: f64) -> Result<()> {
    check(v.is_finite(), key, "must be finite")
}

fn resolve(raw: &ConfigFile) -> Result<ExperimentConfig> {
    let spectral = resolve_spectral(&raw.spectral)?;
    let medium = resolve_medium(&raw.medium, &spectral)?;
    let run = resolve_run(&raw.run, &raw.spectral, &medium)?;
    let scenario = Scenario {
        medium,
        spectral,
        run,
    };
    let stability = resolve_analysis(&raw.analysis)?;
    let spectrum = resolve_scan(&raw.scan, &scenario)?;
    let threshold = resolve_threshold(&raw.threshold, stability)?;
    Ok(ExperimentConfig {
        experiment: raw.experiment.unwrap_or(ExperimentKind::Simulate),
        output_dir: raw
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out")),
        preset: None,
        scenario,
        spectrum,
        threshold,
        stability,
        artifact_defaults: Vec::new(),
    })
}

fn resolve_spectral(s: &SpectralSection) -> Result<SpectralModel> {
    let d = SpectralModel::default();
    let m = SpectralModel {
        gamma: s.gamma.unwrap_or(d.gamma),
        sigma0: s.sigma0.unwrap_or(d.sigma0),
        rabi_2v: s.rabi_2v.unwrap_or(d.rabi_2v),
        delta_c: s.delta_c.unwrap_or(d.delta_c),
        gain_kappa: s.gain_kappa.unwrap_or(d.gain_kappa),
        gain_width: s.gain_width.unwrap_or(d.gain_width),
        beta0: s.beta0.unwrap_or(d.beta0),
        beta_mode: match s.beta_mode.unwrap_or(BetaModeKind::Constant) {
            BetaModeKind::Constant => BetaMode::Constant,
            BetaModeKind::Lorentzian => BetaMode::Lorentzian {
                width: s.beta_width.unwrap_or(2.0),
            },
        },
    };
    positive("spectral.gamma", m.gamma)?;
    positive("spectral.sigma0", m.sigma0)?;
    finite("spectral.rabi_2v", m.rabi_2v)?;
    finite("spectral.delta_c", m.delta_c)?;
    non_negative("spectral.gain_kappa", m.gain_kappa)?;
    positive("spectral.gain_width", m.gain_width)?;
    check(
        (0.0..=1.0).contains(&m.beta0),
        "spectral.beta0",
        "must lie in [0, 1]",
    )?;
    if let Some(w) = s.beta_width {
        positive("spectral.beta_width", w)?;
    }
    if let Some(e) = s.emission_detuning {
        finite("spectral.emission_detuning", e)?;
    }
    m.validate()
        .map_err(|e| Error::config("spectral", e.to_string()))?;
    Ok(m)
}

fn resolve_medium(s: &MediumSection, spectral: &SpectralModel) -> Result<Medium> {
    let n0 = s.n0.unwrap_or(1.0);
    positive("medium.n0", n0)?;
    let cutoff_sigmas = s.cutoff_sigmas.unwrap_or(4.0);
    check(
        cutoff_sigmas >= 3.0 && cutoff_sigmas.is_finite(),
        "medium.cutoff_sigmas",
        "must be at least 3",
    )?;
    let shape = s.shape.unwrap_or(ShapeKind::UniformSphere);
    let unit = match shape {
        ShapeKind::UniformSphere => CloudGeometry::uniform(1.0, n0),
        ShapeKind::Gaussian => CloudGeometry {
            shape: CloudShape::Gaussian {
                sigma_r: 1.0,
                cutoff: cutoff_sigmas,
            },
            n0,
        },
    };
    let radius = match (s.b0, s.radius) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "medium.b0",
                "b0 and radius are mutually exclusive",
            ));
        }
        (None, Some(r)) => {
            positive("medium.radius", r)?;
            r
        }
        (b0, None) => {
            let b0 = b0.unwrap_or(10.0);
            check(b0 >= 0.0, "medium.b0", "must be >= 0")?;
            positive("medium.b0", b0)?;
            b0 / unit.diameter_depth(spectral.sigma0)
        }
    };
    let cloud = unit.scaled(radius);
    let channel_radius = match (s.channel_radius, s.channel_fraction) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "medium.channel_radius",
                "channel_radius and channel_fraction are mutually exclusive",
            ));
        }
        (Some(r), None) => {
            non_negative("medium.channel_radius", r)?;
            r
        }
        (None, Some(f)) => {
            non_negative("medium.channel_fraction", f)?;
            f * radius
        }
        (None, None) => 0.0,
    };
    let trap_fraction = s.trap_fraction.unwrap_or(1.0);
    check(
        (0.0..=1.0).contains(&trap_fraction),
        "medium.trap_fraction",
        "must lie in [0, 1]",
    )?;
    let medium = Medium {
        cloud,
        channel: ChannelGeometry {
            radius: channel_radius,
        },
        trap_fraction,
        overlap_gain: s.overlap_gain.unwrap_or(false),
    };
    medium
        .validate()
        .map_err(|e| Error::config("medium", e.to_string()))?;
    Ok(medium)
}

fn resolve_run(s: &RunSection, spectral: &SpectralSection, medium: &Medium) -> Result<RunConfig> {
    let d = RunConfig::default();
    let run = RunConfig {
        n_photons: s.n_photons.unwrap_or(d.n_photons),
        max_order: s.max_order.unwrap_or(d.max_order),
        w_min: s.w_min.unwrap_or(d.w_min),
        roulette_survive: s.roulette_survive.unwrap_or(d.roulette_survive),
        detector_half_angle: s.detector_half_angle.unwrap_or(d.detector_half_angle),
        phase_function: s.phase_function.unwrap_or(d.phase_function),
        seed: s.seed.unwrap_or(d.seed),
        source: s.source.unwrap_or(d.source),
        emission_detuning: spectral.emission_detuning.unwrap_or(d.emission_detuning),
        workers: s.workers,
    };
    check(run.n_photons >= 1, "run.n_photons", "must be at least 1")?;
    check(run.max_order >= 1, "run.max_order", "must be at least 1")?;
    check(
        run.w_min > 0.0 && run.w_min < 1.0,
        "run.w_min",
        "must lie strictly between 0 and 1",
    )?;
    check(
        run.detector_half_angle > 0.0 && run.detector_half_angle <= PI,
        "run.detector_half_angle",
        "must lie in (0, pi]",
    )?;
    check(
        i64::try_from(run.seed).is_ok(),
        "run.seed",
        "must fit in a signed 64-bit integer",
    )?;
    run.validate(medium)?;
    Ok(run)
}

fn resolve_analysis(s: &AnalysisSection) -> Result<StabilityOptions> {
    let d = StabilityOptions::default();
    let o = StabilityOptions {
        source: s.series.unwrap_or(d.source),
        min_count: s.min_count.unwrap_or(d.min_count),
        margin_sigmas: s.margin_sigmas.unwrap_or(d.margin_sigmas),
        max_truncated_fraction: s.max_truncated_fraction.unwrap_or(d.max_truncated_fraction),
    };
    check(o.min_count >= 1, "analysis.min_count", "must be at least 1")?;
    non_negative("analysis.margin_sigmas", o.margin_sigmas)?;
    check(
        o.max_truncated_fraction > 0.0 && o.max_truncated_fraction <= 1.0,
        "analysis.max_truncated_fraction",
        "must lie in (0, 1]",
    )?;
    Ok(o)
}

fn resolve_scan(s: &ScanSection, scenario: &Scenario) -> Result<SpectrumPlan> {
    let b0 = match &s.b0 {
        Some(v) => {
            check(!v.is_empty(), "scan.b0", "must not be empty")?;
            for &b in v {
                positive("scan.b0", b)?;
            }
            v.clone()
        }
        None => vec![scenario.medium.b0(&scenario.spectral)],
    };
    let delta_c = match &s.delta_c {
        Some(v) => {
            check(!v.is_empty(), "scan.delta_c", "must not be empty")?;
            for &d in v {
                finite("scan.delta_c", d)?;
            }
            v.clone()
        }
        None => {
            let lo = s.delta_c_min.unwrap_or(-10.0);
            let hi = s.delta_c_max.unwrap_or(10.0);
            let n = s.delta_c_points.unwrap_or(21);
            finite("scan.delta_c_min", lo)?;
            finite("scan.delta_c_max", hi)?;
            check(n >= 1, "scan.delta_c_points", "must be at least 1")?;
            check(
                n == 1 || lo < hi,
                "scan.delta_c_max",
                "must exceed delta_c_min",
            )?;
            (0..n)
                .map(|i| {
                    if n == 1 {
                        lo
                    } else {
                        lo + (hi - lo) * i as f64 / (n - 1) as f64
                    }
                })
                .collect()
        }
    };
    let observation = match s.observation.unwrap_or(ObservationKind::AllAngles) {
        ObservationKind::AllAngles => Observation::AllAngles,
        ObservationKind::PolarBin => {
            let theta_deg = s.theta_deg.unwrap_or(45.0);
            check(
                (0.0..=180.0).contains(&theta_deg),
                "scan.theta_deg",
                "must lie in [0, 180]",
            )?;
            Observation::PolarBin { theta_deg }
        }
    };
    Ok(SpectrumPlan {
        b0,
        delta_c,
        observation,
    })
}

fn resolve_threshold(s: &ThresholdSection, stability: StabilityOptions) -> Result<ThresholdPlan> {
    let lo = s.lo.unwrap_or(0.0);
    let hi = s.hi.unwrap_or(100.0);
    non_negative("threshold.lo", lo)?;
    finite("threshold.hi", hi)?;
    check(lo < hi, "threshold.hi", "must exceed threshold.lo")?;
    let tol = s.tol.unwrap_or(0.05);
    positive("threshold.tol", tol)?;
    let tol = match s.tol_kind.unwrap_or(ToleranceKind::Relative) {
        ToleranceKind::Relative => Tolerance::Relative(tol),
        ToleranceKind::Absolute => Tolerance::Absolute(tol),
    };
    Ok(ThresholdPlan {
        param: s.param.unwrap_or(ScanParam::PumpRabi),
        bracket: (lo, hi),
        options: ThresholdOptions {
            tol,
            max_retries: s.max_retries.unwrap_or(2),
            stability,
            extrapolation: s.extrapolation.unwrap_or(true),
        },
    })
}

impl ExperimentConfig {
    /// Optical depth of the configured cloud.
    pub fn b0(&self) -> f64 {
        self.scenario.medium.b0(&self.scenario.spectral)
    }

    /// Every parameter explicitly, with the cloud size given as a radius.
    /// The preset name is kept so that reloading reproduces the list of
    /// artifact defaults; output location and worker count are left out
    /// because they do not change results.
    pub fn echo(&self) -> ConfigFile {
        let Scenario {
            medium,
            spectral,
            run,
        } = &self.scenario;
        let (shape, radius, cutoff_sigmas) = match medium.cloud.shape {
            CloudShape::UniformSphere { radius } => (ShapeKind::UniformSphere, radius, None),
            CloudShape::Gaussian { sigma_r, cutoff } => {
                (ShapeKind::Gaussian, sigma_r, Some(cutoff / sigma_r))
            }
        };
        let (beta_mode, beta_width) = match spectral.beta_mode {
            BetaMode::Constant => (BetaModeKind::Constant, None),
            BetaMode::Lorentzian { width } => (BetaModeKind::Lorentzian, Some(width)),
        };
        let (observation, theta_deg) = match self.spectrum.observation {
            Observation::AllAngles => (ObservationKind::AllAngles, None),
            Observation::PolarBin { theta_deg } => (ObservationKind::PolarBin, Some(theta_deg)),
        };
        let (tol_kind, tol) = match self.threshold.options.tol {
            Tolerance::Relative(t) => (ToleranceKind::Relative, t),
            Tolerance::Absolute(t) => (ToleranceKind::Absolute, t),
        };
        ConfigFile {
            experiment: Some(self.experiment),
            output_dir: None,
            preset: self.preset.clone(),
            medium: MediumSection {
                shape: Some(shape),
                b0: None,
                radius: Some(radius),
                cutoff_sigmas,
                n0: Some(medium.cloud.n0),
                channel_radius: Some(medium.channel.radius),
                channel_fraction: None,
                overlap_gain: Some(medium.overlap_gain),
                trap_fraction: Some(medium.trap_fraction),
            },
            spectral: SpectralSection {
                gamma: Some(spectral.gamma),
                sigma0: Some(spectral.sigma0),
                rabi_2v: Some(spectral.rabi_2v),
                delta_c: Some(spectral.delta_c),
                gain_kappa: Some(spectral.gain_kappa),
                gain_width: Some(spectral.gain_width),
                beta0: Some(spectral.beta0),
                beta_mode: Some(beta_mode),
                beta_width,
                emission_detuning: Some(run.emission_detuning),
            },
            run: RunSection {
                n_photons: Some(run.n_photons),
                max_order: Some(run.max_order),
                w_min: Some(run.w_min),
                roulette_survive: Some(run.roulette_survive),
                detector_half_angle: Some(run.detector_half_angle),
                phase_function: Some(run.phase_function),
                seed: Some(run.seed),
                source: Some(run.source),
                workers: None,
            },
            scan: ScanSection {
                b0: Some(self.spectrum.b0.clone()),
                delta_c: Some(self.spectrum.delta_c.clone()),
                delta_c_min: None,
                delta_c_max: None,
                delta_c_points: None,
                observation: Some(observation),
                theta_deg,
            },
            threshold: ThresholdSection {
                param: Some(self.threshold.param),
                lo: Some(self.threshold.bracket.0),
                hi: Some(self.threshold.bracket.1),
                tol: Some(tol),
                tol_kind: Some(tol_kind),
                max_retries: Some(self.threshold.options.max_retries),
                extrapolation: Some(self.threshold.options.extrapolation),
            },
            analysis: AnalysisSection {
                series: Some(self.stability.source),
                min_count: Some(self.stability.min_count),
                margin_sigmas: Some(self.stability.margin_sigmas),
                max_truncated_fraction: Some(self.stability.max_truncated_fraction),
            },
        }
    }

    /// The echo as a TOML document.
    pub fn echo_toml(&self) -> String {
        toml::to_string(&self.echo()).expect("echo holds only finite numbers and plain enums")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_error(text: &str) -> (String, String) {
        match parse_config(text) {
            Err(Error::Config { key, rule }) => (key, rule),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_document_is_the_default_passive_simulation() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Simulate);
        assert_eq!(
            cfg.scenario.medium,
            Medium::passive(CloudGeometry::uniform(5.0, 1.0))
        );
        assert_eq!(cfg.scenario.spectral, SpectralModel::default());
        assert_eq!(cfg.scenario.run, RunConfig::default());
        assert_eq!(cfg.b0(), 10.0);
        assert_eq!(cfg.spectrum.delta_c.len(), 21);
        assert_eq!(cfg.spectrum.delta_c[10], 0.0);
        assert!(cfg.artifact_defaults.is_empty());
    }

    #[test]
    fn negative_b0_names_the_key() {
        let (key, rule) = config_error("[medium]\nb0 = -1.0\n");
        assert_eq!(key, "medium.b0");
        assert!(rule.contains(">= 0"), "{rule}");
    }

    #[test]
    fn unknown_and_mistyped_keys_name_the_key() {
        let (key, rule) = config_error("[medium]\nradiuss = 3.0\n");
        assert_eq!(key, "medium.radiuss");
        assert!(rule.contains("radiuss"), "{rule}");
        let (key, _) = config_error("[run]\nn_photons = \"many\"\n");
        assert_eq!(key, "run.n_photons");
        let (key, _) = config_error("bogus = 1\n");
        assert_eq!(key, "bogus");
        let (key, _) = config_error("[medium]\nb0 = 3.0\nradius = 2.0\n");
        assert_eq!(key, "medium.b0");
        let (key, _) = config_error("[spectral]\nbeta0 = 1.5\n");
        assert_eq!(key, "spectral.beta0");
        let (key, _) = config_error("[medium]\nb0 = = 3\n");
        assert_eq!(key, "b0");
        let (key, _) = config_error("[run]\nsource = \"channel_raman\"\n");
        assert_eq!(key, "run.source");
    }

    #[test]
    fn fig5_b30_preset() {
        let cfg = load_config("", Some("fig5-b30")).unwrap();
        assert!((cfg.b0() - 30.0).abs() < 1e-12);
        let r = cfg.scenario.medium.cloud.size();
        assert!((r - 15.0).abs() < 1e-12);
        assert!((cfg.scenario.medium.channel.radius - 0.1 * r).abs() < 1e-12);
        assert_eq!(cfg.scenario.spectral.rabi_2v, 30.0);
        assert_eq!(cfg.scenario.run.source, SourceKind::CenterPointDipole);
        assert!(cfg
            .artifact_defaults
            .contains(&"medium.channel_fraction".to_string()));
        assert!(!cfg.artifact_defaults.contains(&"medium.b0".to_string()));
        assert!(!cfg
            .artifact_defaults
            .contains(&"spectral.rabi_2v".to_string()));
    }

    #[test]
    fn file_overrides_preset_including_exclusive_groups() {
        let cfg = parse_config(
            "preset = \"fig5-b30\"\n[medium]\nradius = 4.0\n[spectral]\nrabi_2v = 10.0\n",
        )
        .unwrap();
        assert_eq!(cfg.scenario.medium.cloud.size(), 4.0);
        assert_eq!(cfg.scenario.spectral.rabi_2v, 10.0);
        assert!((cfg.scenario.medium.channel.radius - 0.4).abs() < 1e-15);
        let (key, _) = config_error("preset = \"nope\"\n");
        assert_eq!(key, "preset");
    }

    #[test]
    fn every_preset_echo_round_trips() {
        for name in preset_names() {
            let cfg = load_config("", Some(name)).unwrap();
            let echo = cfg.echo_toml();
            let again = parse_config(&echo).unwrap();
            assert_eq!(again.scenario, cfg.scenario, "{name}");
            assert_eq!(again.spectrum, cfg.spectrum, "{name}");
            assert_eq!(again.threshold, cfg.threshold, "{name}");
            assert_eq!(again.stability, cfg.stability, "{name}");
            assert_eq!(again.echo_toml(), echo, "{name}");
        }
    }

    #[test]
    fn fig3_grid_has_105_points() {
        let cfg = load_config("", Some("fig3-scan")).unwrap();
        assert_eq!(cfg.spectrum.b0.len() * cfg.spectrum.delta_c.len(), 105);
        assert_eq!(
            cfg.spectrum.observation,
            Observation::PolarBin { theta_deg: 45.0 }
        );
    }
}
