//! Bisects the critical gain of a uniformly pumped sphere and compares it
//! with the diffusion estimate.
//!
//!     cargo run --release --example letokhov_threshold

use coldlase::analysis::{threshold_scan, ScanParam};
use coldlase::config::load_config;

fn main() -> Result<(), coldlase::Error> {
    // a smaller cloud than the preset keeps this to a few seconds
    let mut cfg = load_config("[medium]\nb0 = 20.0\n", Some("letokhov-validate"))?;
    cfg.scenario.run.n_photons = 20_000;
    let plan = &cfg.threshold;
    let report = threshold_scan(
        &cfg.scenario,
        ScanParam::GainG0,
        (0.01, 0.06),
        &plan.options,
    )?;
    for p in &report.probes {
        println!("g = {:.5}: {:?}", p.value, p.verdict);
    }
    println!(
        "critical gain {:.5} in [{:.5}, {:.5}]",
        report.critical_value, report.bracket.0, report.bracket.1
    );
    if let (Some(a), Some(gap)) = (report.analytic_letokhov, report.relative_gap) {
        println!("diffusion estimate {a:.5} ({:+.1}%)", 100.0 * gap);
    }
    Ok(())
}
