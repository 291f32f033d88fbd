// Order-resolved escape from a passive sphere, with and without anti-Stokes
// conversion.

use coldlase::analysis::{classify_stability, mean_scattering_order, Scenario, StabilityOptions};
use coldlase::medium::{CloudGeometry, Medium};
use coldlase::spectral::SpectralModel;
use coldlase::transport::RunConfig;

fn main() -> Result<(), coldlase::Error> {
    for beta0 in [0.0, 0.1] {
        let scenario = Scenario {
            medium: Medium::passive(CloudGeometry::uniform(5.0, 1.0)),
            spectral: SpectralModel {
                beta0,
                ..SpectralModel::default()
            },
            run: RunConfig {
                n_photons: 50_000,
                seed: 3,
                ..RunConfig::default()
            },
        };
        let tally = scenario.simulate()?;
        let n = tally.photons_launched as f64;
        println!("beta0 = {beta0}");
        println!(
            "  escaped elastic {:.4}, anti-Stokes {:.4}, mean order {:.2}",
            tally.elastic.total() / n,
            tally.anti_stokes.total() / n,
            mean_scattering_order(&tally)?
        );
        for (order, w) in tally.elastic.by_order.iter().enumerate().take(12) {
            println!("  order {order:>2}: {:.5}", w / n);
        }
        let report = classify_stability(&tally, &StabilityOptions::default());
        println!("  tail ratio {:?}, verdict {:?}", report.q, report.verdict);
    }
    Ok(())
}
