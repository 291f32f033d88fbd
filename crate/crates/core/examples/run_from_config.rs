//! Loads a TOML configuration the way the command-line tool does and writes
//! the result tables to a directory.
//!
//!     cargo run --example run_from_config -- my.toml out/

use coldlase::config::parse_config;
use coldlase::experiment::run_experiment;

const DEFAULT: &str = r#"
experiment = "simulate"
[medium]
b0 = 8.0
[spectral]
beta0 = 0.05
[run]
n_photons = 20000
seed = 42
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEFAULT.to_string(),
    };
    let mut cfg = parse_config(&text)?;
    cfg.output_dir = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("coldlase-example"), Into::into);

    let outcome = run_experiment(&cfg)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    println!("\nresolved configuration:\n{}", cfg.echo_toml());
    std::process::exit(outcome.exit_code);
}
