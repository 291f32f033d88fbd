//! Pumped channel through a trapping cloud: the tail of the order series
//! flattens as the pump grows, and a deeper cloud destabilises at a lower
//! pump. Uses the `fig5-b30` and `fig5-b50` presets with fewer photons.
//!
//!     cargo run --release --example fig5_soft_cavity

use coldlase::analysis::{classify_stability, ScanParam};
use coldlase::config::load_config;

fn main() -> Result<(), coldlase::Error> {
    for preset in ["fig5-b30", "fig5-b50"] {
        let mut cfg = load_config("", Some(preset))?;
        cfg.scenario.run.n_photons = 50_000;
        println!("{preset}");
        for pump in [0.0, 15.0, 30.0, 45.0, 60.0] {
            let s = ScanParam::PumpRabi.apply(&cfg.scenario, pump)?;
            let tally = s.simulate()?;
            let r = classify_stability(&tally, &cfg.stability);
            let q =
                r.q.zip(r.q_err)
                    .map_or("n/a".to_string(), |(q, e)| format!("{q:.4} +/- {e:.4}"));
            println!(
                "  2V = {pump:>4}: q = {q}, {:?}, truncated {:.3}",
                r.verdict, r.truncated_fraction
            );
        }
    }
    Ok(())
}
