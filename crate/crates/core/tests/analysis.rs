mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use coldlase::analysis::{
    bisect_threshold, mean_scattering_order, spectral_scan, tail_ratio, threshold_scan,
    Observation, OrderSeries, ScanParam, Scenario, StabilityOptions, StabilityReport,
    ThresholdOptions, Tolerance, Verdict,
};
use coldlase::medium::{CloudGeometry, Medium};
use coldlase::spectral::{BetaMode, SpectralModel};
use coldlase::transport::{PhaseFunction, RunConfig};

fn overlap_sphere(radius: f64, kappa: f64, n_photons: u64, seed: u64) -> Scenario {
    Scenario {
        medium: Medium::overlap(CloudGeometry::uniform(radius, 1.0)),
        spectral: SpectralModel {
            rabi_2v: 1.0,
            gain_kappa: kappa,
            ..SpectralModel::default()
        },
        run: RunConfig {
            n_photons,
            seed,
            phase_function: PhaseFunction::Isotropic,
            ..RunConfig::default()
        },
    }
}

#[test]
fn tail_ratio_error_bar_covers_the_true_ratio() {
    // geometric series with 3% log-normal noise on each order
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let trials = 1000;
    let window = (10, 29);
    let mut covered = 0;
    let mut qs = Vec::new();
    let mut errs = Vec::new();
    for _ in 0..trials {
        let q_true: f64 = rng.random_range(0.8..1.2);
        let series: Vec<f64> = (0..30)
            .map(|n| {
                let z: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
                q_true.powi(n) * (0.03 * z).exp()
            })
            .collect();
        let (q, q_err) = tail_ratio(&OrderSeries::new(series, 1, window).unwrap()).unwrap();
        if (q - q_true).abs() <= 2.0 * q_err {
            covered += 1;
        }
        qs.push(q / q_true);
        errs.push(q_err / q);
    }
    // with 18 degrees of freedom a 2-sigma band holds about 94% of the mass
    let coverage = covered as f64 / trials as f64;
    assert!(coverage >= 0.92, "coverage {coverage}");
    // the reported error matches the observed scatter of the estimate
    let (_, sem) = common::mean_and_sem(&qs);
    let spread = sem * (trials as f64).sqrt();
    let mean_err = errs.iter().sum::<f64>() / trials as f64;
    assert!(
        (mean_err / spread - 1.0).abs() < 0.1,
        "{mean_err} vs {spread}"
    );
}

#[test]
fn mean_order_matches_walker_and_grows_quadratically() {
    let n = 100_000;
    let mut means = Vec::new();
    for (b0, seed) in [(10.0, 31), (20.0, 32)] {
        let mut s = overlap_sphere(b0 / 2.0, 0.0, n as u64, seed);
        s.medium = Medium::passive(CloudGeometry::uniform(b0 / 2.0, 1.0));
        let engine = mean_scattering_order(&s.simulate().unwrap()).unwrap();
        let orders: Vec<f64> = common::walker_orders(b0 / 2.0, n, seed + 100)
            .into_iter()
            .map(f64::from)
            .collect();
        let (walker, _) = common::mean_and_sem(&orders);
        assert!(
            (engine / walker - 1.0).abs() < 0.02,
            "b0 {b0}: {engine} vs {walker}"
        );
        means.push((engine, walker));
    }
    let engine_ratio = means[1].0 / means[0].0;
    let walker_ratio = means[1].1 / means[0].1;
    assert!(
        (engine_ratio / 4.0 - 1.0).abs() <= 0.15,
        "engine ratio {engine_ratio}"
    );
    assert!(
        (walker_ratio / 4.0 - 1.0).abs() <= 0.15,
        "walker ratio {walker_ratio}"
    );
}

#[test]
fn spectrum_sum_is_exact_bookkeeping() {
    let mut s = overlap_sphere(3.0, 0.01, 2_000, 41);
    s.spectral.beta0 = 0.2;
    s.spectral.beta_mode = BetaMode::Lorentzian { width: 2.0 };
    let table = spectral_scan(
        &s,
        &[4.0, 8.0],
        &[-3.0, 0.0, 3.0],
        Observation::AllAngles,
        &StabilityOptions::default(),
    )
    .unwrap();
    assert_eq!(table.rows.len(), 6);
    for r in &table.rows {
        let (e, a, sum) = (r.elastic.unwrap(), r.anti_stokes.unwrap(), r.sum.unwrap());
        assert_eq!(sum, e + a);
    }
}

fn report(verdict: Verdict) -> StabilityReport {
    StabilityReport {
        q: None,
        q_err: None,
        verdict,
        truncated_fraction: 0.0,
        window: None,
        detector_q: None,
        overflow: false,
    }
}

#[test]
fn bisection_probe_count_follows_log2() {
    for (lo, hi, tol, threshold) in [
        (0.0, 1.0, 0.01, 0.37),
        (0.0, 120.0, 0.5, 59.0),
        (2.0, 3.0, 1e-3, 2.999),
    ] {
        let b = bisect_threshold(lo, hi, Tolerance::Absolute(tol), 0, |x, _| {
            Ok(report(if x >= threshold {
                Verdict::Diverging
            } else {
                Verdict::Converging
            }))
        })
        .unwrap();
        let expected = ((hi - lo) / tol).log2().ceil() as usize + 2;
        assert_eq!(b.probes.len(), expected);
        assert!(b.bracket.0 < threshold && threshold <= b.bracket.1);
        assert!(b.bracket.1 - b.bracket.0 <= tol);
    }
}

#[test]
fn threshold_bracket_contains_the_estimate_and_seeds_agree() {
    let opts = ThresholdOptions {
        tol: Tolerance::Relative(0.05),
        ..ThresholdOptions::default()
    };
    let mut found = Vec::new();
    for seed in [51, 52] {
        let s = overlap_sphere(6.0, 0.01, 20_000, seed);
        let r = threshold_scan(&s, ScanParam::GainG0, (0.01, 0.2), &opts).unwrap();
        assert!(r.bracket.0 < r.critical_value && r.critical_value < r.bracket.1);
        found.push(r);
    }
    let width =
        (found[0].bracket.1 - found[0].bracket.0).max(found[1].bracket.1 - found[1].bracket.0);
    let gap = (found[0].critical_value - found[1].critical_value).abs();
    assert!(
        gap <= width,
        "critical {} vs {}, width {width}",
        found[0].critical_value,
        found[1].critical_value
    );
}
