//! A pencil beam through the centre of a uniform sphere: the unscattered
//! fraction should follow exp(-b0).

use coldlase::analysis::Scenario;
use coldlase::medium::{CloudGeometry, Medium};
use coldlase::spectral::SpectralModel;
use coldlase::transport::{RunConfig, SourceKind};

fn main() -> Result<(), coldlase::Error> {
    let n = 1_000_000;
    for b0 in [0.5, 1.0, 2.0, 4.0, 6.0] {
        let s = Scenario {
            medium: Medium::passive(CloudGeometry::uniform(b0 / 2.0, 1.0)),
            spectral: SpectralModel::default(),
            run: RunConfig {
                n_photons: n,
                source: SourceKind::ExternalPencil,
                seed: 19,
                ..RunConfig::default()
            },
        };
        let tally = s.simulate()?;
        let measured = tally.elastic.by_order[0] / n as f64;
        let expected = (-b0).exp();
        let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
        println!(
            "b0 = {b0}: {measured:.5} vs {expected:.5} ({:+.2} sigma)",
            (measured - expected) / sigma
        );
    }
    Ok(())
}
