use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coldlase::config::{load_config, preset_names, ExperimentConfig, ExperimentKind};
use coldlase::experiment::run_experiment;
use coldlase::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Monte-Carlo random-laser transport in a cold-atom cloud"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One transport run: per-order tallies and a stability verdict.
    Simulate(Common),
    /// Emission versus control detuning for a list of optical depths.
    ScanSpectrum(Common),
    /// Bisect the instability threshold in pump, gain or cloud size.
    ScanThreshold(Common),
    /// Run the built-in statistical and conservation checks.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset applied under the configuration file.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Photon histories per run.
    #[arg(long)]
    photons: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn load(kind: ExperimentKind, args: &Common) -> Result<ExperimentConfig, Error> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Config {
            key: "--config".into(),
            rule: format!("cannot read {}: {e}", path.display()),
        })?,
        None => String::new(),
    };
    let mut cfg = load_config(&text, args.preset.as_deref())?;
    cfg.experiment = kind;
    if let Some(seed) = args.seed {
        if i64::try_from(seed).is_err() {
            return Err(Error::Config {
                key: "--seed".into(),
                rule: "must fit in a signed 64-bit integer".into(),
            });
        }
        cfg.scenario.run.seed = seed;
    }
    if let Some(n) = args.photons {
        if n == 0 {
            return Err(Error::Config {
                key: "--photons".into(),
                rule: "must be at least 1".into(),
            });
        }
        cfg.scenario.run.n_photons = n;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(Error::Config {
                key: "--workers".into(),
                rule: "must be at least 1".into(),
            });
        }
        cfg.scenario.run.workers = Some(w);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::ScanSpectrum(a) => (ExperimentKind::ScanSpectrum, a),
        Command::ScanThreshold(a) => (ExperimentKind::ScanThreshold, a),
        Command::Validate(a) => (ExperimentKind::Validate, a),
    };
    let cfg = match load(kind, args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(&e, Error::Config { key, .. } if key == "preset") {
                eprintln!("presets: {}", preset_names().join(", "));
            }
            return ExitCode::from(2);
        }
    };
    match run_experiment(&cfg) {
        Ok(outcome) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e @ (Error::Config { .. } | Error::Bracket { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
