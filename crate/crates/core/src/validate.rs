//! Built-in self-checks of the transport engine against closed forms and
//! against a deliberately naive reference walker.
//!
//! These are reduced versions of the crate's acceptance tests, sized to
//! finish in well under a minute. Each check reports its measured value,
//! the expectation and the tolerance it was held to.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{mean_scattering_order, Scenario};
use crate::medium::{CloudGeometry, Medium, RegionKind};
use crate::rng::{derive_seed, StreamFactory};
use crate::spectral::SpectralModel;
use crate::transport::{
    russian_roulette, sample_dipole_cos, sample_free_path, FlightOutcome, PhaseFunction, Photon,
    RunConfig, SourceKind, Tally,
};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn within(name: &'static str, value: f64, expected: f64, tolerance: f64) -> Self {
        let passed = (value - expected).abs() <= tolerance;
        CheckResult {
            name,
            passed,
            value,
            expected,
            tolerance,
            detail: format!("{value:.6e} vs {expected:.6e} (tolerance {tolerance:.2e})"),
        }
    }
}

/// Runs every check. `seed` selects the random streams; `workers` is passed
/// to the transport runs.
pub fn run_suite(seed: u64, workers: Option<usize>) -> Vec<CheckResult> {
    let seeds = |label| derive_seed(seed, label);
    vec![
        kinetic_identity(seeds(0)),
        conservation(seeds(1), workers),
        beer_lambert(seeds(2), workers),
        loss_ratio(seeds(3), workers),
        free_path_ks(seeds(4)),
        dipole_second_moment(seeds(5)),
        roulette_unbiased(seeds(6)),
        reference_walker(seeds(7), workers),
        worker_independence(seeds(8)),
    ]
}

fn passive(
    b0: f64,
    phase_function: PhaseFunction,
    n_photons: u64,
    seed: u64,
    workers: Option<usize>,
) -> Scenario {
    Scenario {
        medium: Medium::passive(CloudGeometry::uniform(b0 / 2.0, 1.0)),
        spectral: SpectralModel::default(),
        run: RunConfig {
            n_photons,
            phase_function,
            seed,
            workers,
            ..RunConfig::default()
        },
    }
}

fn simulate(s: &Scenario) -> Tally {
    s.simulate().expect("built-in scenarios are valid")
}

fn kinetic_identity(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let spectral = SpectralModel {
            rabi_2v: rng.random_range(0.0..50.0),
            delta_c: rng.random_range(-20.0..20.0),
            gain_kappa: rng.random_range(0.0..1e-2),
            beta0: rng.random_range(0.0..0.9),
            ..SpectralModel::default()
        };
        let delta = rng.random_range(-10.0..10.0);
        let density = rng.random_range(0.0..5.0);
        for region in [RegionKind::Trap, RegionKind::GainChannel] {
            let k = spectral.kinetic_lengths(delta, density, region);
            worst = worst.max((k.l_ls_inv - (k.l_ex_inv - k.l_sc_inv)).abs());
        }
    }
    CheckResult::within("kinetic_identity", worst, 0.0, 1e-12)
}

fn conservation(seed: u64, workers: Option<usize>) -> CheckResult {
    let tally = simulate(&passive(10.0, PhaseFunction::Dipole, 20_000, seed, workers));
    let ratio = tally.total_escaped() / tally.photons_launched as f64;
    CheckResult::within("conservation", ratio, 1.0, 0.002)
}

fn beer_lambert(seed: u64, workers: Option<usize>) -> CheckResult {
    let mut s = passive(6.0, PhaseFunction::Dipole, 200_000, seed, workers);
    s.run.source = SourceKind::ExternalPencil;
    let tally = simulate(&s);
    let n = tally.photons_launched as f64;
    let unscattered = tally.elastic.by_order.first().copied().unwrap_or(0.0) / n;
    let p = (-6.0f64).exp();
    CheckResult::within(
        "beer_lambert",
        unscattered,
        p,
        3.0 * (p * (1.0 - p) / n).sqrt(),
    )
}

fn loss_ratio(seed: u64, workers: Option<usize>) -> CheckResult {
    let mut s = passive(100.0, PhaseFunction::Dipole, 20_000, seed, workers);
    s.spectral.beta0 = 0.3;
    let tally = simulate(&s);
    let c = |n: usize| tally.collisions.get(n).copied().unwrap_or(0.0);
    let trials: f64 = (5..12).map(c).sum();
    let survivors: f64 = (6..13).map(c).sum();
    let ratio = survivors / trials;
    CheckResult::within("loss_ratio", ratio, 0.7, 3.0 * (0.21 / trials).sqrt())
}

/// Two-sided Kolmogorov p-value for statistic `d` at sample size `n`.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        p += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

fn free_path_ks(seed: u64) -> CheckResult {
    let medium = Medium::passive(CloudGeometry::uniform(1e3, 1.0));
    let spectral = SpectralModel::default();
    let factory = StreamFactory::new(seed);
    let delta = 0.5;
    let rate = spectral.sigma_sc(delta);
    let n = 20_000;
    let mut paths: Vec<f64> = (0..n)
        .map(|i| {
            let mut rng = factory.stream(i as u64);
            let photon = Photon::new(Vec3::zeros(), Vec3::z(), delta);
            match sample_free_path(&photon, &medium, &spectral, &mut rng) {
                FlightOutcome::Collision { distance, .. }
                | FlightOutcome::Escaped { distance, .. } => distance,
            }
        })
        .collect();
    paths.sort_by(f64::total_cmp);
    let d = paths
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let f = 1.0 - (-rate * s).exp();
            (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    let p = kolmogorov_p(d, n);
    CheckResult {
        name: "free_path_ks",
        passed: p > 0.01,
        value: p,
        expected: 1.0,
        tolerance: 0.99,
        detail: format!("KS statistic {d:.5}, p = {p:.4} (must exceed 0.01)"),
    }
}

fn dipole_second_moment(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 100_000;
    let mean = (0..n)
        .map(|_| sample_dipole_cos(rng.random()).powi(2))
        .sum::<f64>()
        / n as f64;
    // Var(mu^2) = E[mu^4] - (2/5)^2 = 9/35 - 4/25
    let sigma = ((9.0 / 35.0 - 0.16) / n as f64).sqrt();
    CheckResult::within("dipole_second_moment", mean, 0.4, 3.0 * sigma)
}

fn roulette_unbiased(seed: u64) -> CheckResult {
    let cfg = RunConfig::default();
    let factory = StreamFactory::new(seed);
    let w = 0.3 * cfg.w_min;
    let n = 100_000;
    let total: f64 = (0..n)
        .map(|i| {
            let mut photon = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
            photon.weight = w;
            russian_roulette(&mut photon, &cfg, &mut factory.stream(i as u64));
            photon.weight
        })
        .sum();
    let mean = total / n as f64;
    let sigma = w * ((1.0 / cfg.roulette_survive - 1.0) / n as f64).sqrt();
    CheckResult::within("roulette_unbiased", mean, w, 3.0 * sigma)
}

/// Analogue random walk from the centre of a uniform sphere of radius `r`
/// with unit mean free path and isotropic scattering. Returns the number of
/// scatterings before escape.
fn walk(r: f64, rng: &mut ChaCha8Rng) -> u32 {
    let mut x = Vec3::zeros();
    let mut order = 0;
    loop {
        let mu: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        let st = (1.0 - mu * mu).sqrt();
        let dir = Vec3::new(st * phi.cos(), st * phi.sin(), mu);
        let step = -(1.0 - rng.random::<f64>()).ln();
        x += step * dir;
        if x.norm() >= r {
            return order;
        }
        order += 1;
    }
}

fn reference_walker(seed: u64, workers: Option<usize>) -> CheckResult {
    let n = 20_000u64;
    let b0 = 6.0;
    let tally = simulate(&passive(b0, PhaseFunction::Isotropic, n, seed, workers));
    let mc = mean_scattering_order(&tally).unwrap_or(f64::NAN);
    let mc_sq = tally
        .elastic
        .by_order
        .iter()
        .enumerate()
        .map(|(k, w)| (k * k) as f64 * w)
        .sum::<f64>()
        / tally.elastic.total();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let orders: Vec<f64> = (0..n).map(|_| walk(b0 / 2.0, &mut rng) as f64).collect();
    let m = orders.iter().sum::<f64>() / n as f64;
    let v = orders.iter().map(|o| (o - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma = ((mc_sq - mc * mc + v) / n as f64).sqrt();
    CheckResult::within("reference_walker", mc, m, 3.0 * sigma)
}

fn worker_independence(seed: u64) -> CheckResult {
    let mut s = passive(8.0, PhaseFunction::Dipole, 5_000, seed, Some(1));
    s.spectral.beta0 = 0.1;
    let one = simulate(&s);
    s.run.workers = Some(3);
    let three = simulate(&s);
    CheckResult {
        name: "worker_independence",
        passed: one == three,
        value: (one == three) as u8 as f64,
        expected: 1.0,
        tolerance: 0.0,
        detail: format!(
            "tallies with 1 and 3 workers are {}",
            if one == three {
                "identical"
            } else {
                "different"
            }
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_p_reference_values() {
        // asymptotic critical values: lambda = 1.3581 at 5%, 1.6276 at 1%
        let n = 1_000_000;
        let at = |lambda: f64| kolmogorov_p(lambda / (n as f64).sqrt(), n);
        assert!((at(1.3581) - 0.05).abs() < 1e-3);
        assert!((at(1.6276) - 0.01).abs() < 2e-4);
        assert!(at(0.3) > 0.99);
    }

    #[test]
    fn suite_passes() {
        for c in run_suite(7, None) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
