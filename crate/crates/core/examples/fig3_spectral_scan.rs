//! Emission into a polar bin versus control detuning, for several optical
//! depths, on a reduced grid of the `fig3-scan` preset.

use coldlase::analysis::{bump_amplitudes, spectral_scan};
use coldlase::config::load_config;

fn main() -> Result<(), coldlase::Error> {
    let mut cfg = load_config("", Some("fig3-scan"))?;
    cfg.scenario.run.n_photons = 20_000;
    let grid: Vec<f64> = (-4..=4).map(|i| 2.0 * i as f64).collect();
    let b0 = [1.0, 10.0, 20.0];
    let table = spectral_scan(
        &cfg.scenario,
        &b0,
        &grid,
        cfg.spectrum.observation,
        &cfg.stability,
    )?;

    println!(
        "{:>6} {:>6} {:>10} {:>10} {:>10}",
        "b0", "dc", "elastic", "anti", "sum"
    );
    for r in &table.rows {
        let cell = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.5}"));
        println!(
            "{:>6} {:>6} {:>10} {:>10} {:>10}",
            r.b0,
            r.delta_c,
            cell(r.elastic),
            cell(r.anti_stokes),
            cell(r.sum)
        );
    }
    for (b0, bump) in bump_amplitudes(&table) {
        println!("bump at b0 = {b0}: {bump:?}");
    }
    Ok(())
}
