//! Monte-Carlo photon transport through the trapping and amplifying cloud.
//!
//! Each history alternates flights and collisions. Collisions with F0=3
//! atoms are sampled by Woodcock delta tracking against the peak scattering
//! coefficient, so inhomogeneous density profiles need no ray marching. Gain
//! is not sampled: the weight picks up `exp(int g ds)` over the analytic
//! intersections of every flight with the gain region. A collision either
//! scatters elastically, raising the scattering order by one, or converts
//! the photon to the anti-Stokes channel, after which it leaves the cloud
//! without further interaction.
//!
//! Escaped weight is binned by order, spectral channel and direction, which
//! is the per-order expansion of the emitted intensity.

mod photon;
mod tally;

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::rng::{PhotonRng, StreamFactory};
use crate::spectral::SpectralModel;
use crate::Vec3;

pub use photon::{Photon, SpectralChannel};
pub use tally::{angle_bin, order_bucket, ChannelTally, Tally, ANGLE_BINS, ORDER_BUCKET_EDGES};

/// Weights are capped here and the run is flagged as diverged.
pub const WEIGHT_CAP: f64 = 1e300;

/// Histories per independently seeded work unit. Fixed so the reduction
/// order, and with it every floating-point sum, does not depend on the
/// number of workers.
const CHUNK: u64 = 2048;
/// Work units reduced per parallel batch.
const BATCH: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseFunction {
    Isotropic,
    /// Scalar Rayleigh pattern, `p(cos) ~ 1 + cos^2`.
    Dipole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Point source at the cloud centre with a dipole pattern about x.
    CenterPointDipole,
    /// Spontaneous Raman emission distributed over the gain region.
    ChannelRaman,
    /// Collimated beam entering at the -z pole, heading through the centre.
    ExternalPencil,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_photons: u64,
    pub max_order: u32,
    /// Roulette is played below this weight.
    pub w_min: f64,
    pub roulette_survive: f64,
    /// Half-angle of the detector cone about +z, in radians.
    pub detector_half_angle: f64,
    pub phase_function: PhaseFunction,
    pub seed: u64,
    pub source: SourceKind,
    /// Emission detuning from the closed transition.
    pub emission_detuning: f64,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_photons: 100_000,
            max_order: 400,
            w_min: 1e-4,
            roulette_survive: 0.1,
            detector_half_angle: 0.1,
            phase_function: PhaseFunction::Dipole,
            seed: 1,
            source: SourceKind::CenterPointDipole,
            emission_detuning: 0.0,
            workers: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self, medium: &Medium) -> Result<()> {
        if !(self.roulette_survive > 0.0 && self.roulette_survive < 1.0) {
            return Err(Error::config(
                "run.roulette_survive",
                "must lie strictly between 0 and 1",
            ));
        }
        if !(self.w_min > 0.0 && self.w_min < 1.0) {
            return Err(Error::config(
                "run.w_min",
                "must lie strictly between 0 and 1",
            ));
        }
        if !(self.detector_half_angle > 0.0 && self.detector_half_angle <= PI) {
            return Err(Error::config(
                "run.detector_half_angle",
                "must lie in (0, pi]",
            ));
        }
        if !self.emission_detuning.is_finite() {
            return Err(Error::config(
                "spectral.emission_detuning",
                "must be finite",
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::config("run.workers", "must be at least 1"));
        }
        if self.source == SourceKind::ChannelRaman
            && !medium.overlap_gain
            && medium.channel.radius <= 0.0
        {
            return Err(Error::config(
                "run.source",
                "channel_raman needs a gain channel (channel_radius > 0) or overlap_gain",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlightOutcome {
    Collision { at: Vec3, distance: f64 },
    Escaped { exit: Vec3, distance: f64 },
}

impl FlightOutcome {
    pub fn distance(&self) -> f64 {
        match *self {
            FlightOutcome::Collision { distance, .. } | FlightOutcome::Escaped { distance, .. } => {
                distance
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollisionOutcome {
    Elastic(Vec3),
    ConvertedAntiStokes(Vec3),
}

/// Cosine of the scattering angle drawn from `(3/8)(1 + mu^2)`, by inverting
/// its cumulative distribution (a depressed cubic with one real root).
pub fn sample_dipole_cos(u: f64) -> f64 {
    let a = 4.0 * u - 2.0;
    let root = (a * a + 1.0).sqrt();
    ((a + root).cbrt() + (a - root).cbrt()).clamp(-1.0, 1.0)
}

fn sample_cos(kind: PhaseFunction, rng: &mut PhotonRng) -> f64 {
    let u: f64 = rng.random();
    match kind {
        PhaseFunction::Isotropic => 2.0 * u - 1.0,
        PhaseFunction::Dipole => sample_dipole_cos(u),
    }
}

/// Unit vector at polar cosine `mu` and azimuth `phi` about `axis`.
pub fn rotate_about(axis: &Vec3, mu: f64, phi: f64) -> Vec3 {
    // Duff et al. branchless orthonormal basis
    let sign = 1f64.copysign(axis.z);
    let a = -1.0 / (sign + axis.z);
    let b = axis.x * axis.y * a;
    let t1 = Vec3::new(1.0 + sign * axis.x * axis.x * a, sign * b, -sign * axis.x);
    let t2 = Vec3::new(b, sign + axis.y * axis.y * a, -axis.y);
    let st = (1.0 - mu * mu).max(0.0).sqrt();
    let out = mu * axis + st * (phi.cos() * t1 + phi.sin() * t2);
    out / out.norm()
}

/// New direction after scattering from `in_dir`.
pub fn sample_phase_function(in_dir: &Vec3, kind: PhaseFunction, rng: &mut PhotonRng) -> Vec3 {
    let mu = sample_cos(kind, rng);
    let phi = 2.0 * PI * rng.random::<f64>();
    rotate_about(in_dir, mu, phi)
}

/// Dipole emission pattern about the x polarization axis.
pub fn sample_dipole_emission(rng: &mut PhotonRng) -> Vec3 {
    let mu = sample_dipole_cos(rng.random());
    let phi = 2.0 * PI * rng.random::<f64>();
    let st = (1.0 - mu * mu).max(0.0).sqrt();
    Vec3::new(mu, st * phi.cos(), st * phi.sin())
}

pub fn emit_source(cfg: &RunConfig, medium: &Medium, rng: &mut PhotonRng) -> Photon {
    let delta = cfg.emission_detuning;
    match cfg.source {
        SourceKind::CenterPointDipole => {
            Photon::new(Vec3::zeros(), sample_dipole_emission(rng), delta)
        }
        SourceKind::ExternalPencil => Photon::new(
            Vec3::new(0.0, 0.0, -medium.boundary_radius()),
            Vec3::z(),
            delta,
        ),
        SourceKind::ChannelRaman => {
            let pos = sample_gain_position(medium, rng);
            Photon::new(pos, sample_dipole_emission(rng), delta)
        }
    }
}

/// Position in the gain region, weighted by density.
fn sample_gain_position(medium: &Medium, rng: &mut PhotonRng) -> Vec3 {
    let rb = medium.boundary_radius();
    let n0 = medium.cloud.n0;
    let disk = medium.channel.radius.min(rb);
    let whole = medium.overlap_gain || disk >= rb;
    loop {
        let x = if whole {
            Vec3::new(
                rb * (2.0 * rng.random::<f64>() - 1.0),
                rb * (2.0 * rng.random::<f64>() - 1.0),
                rb * (2.0 * rng.random::<f64>() - 1.0),
            )
        } else {
            let r = disk * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            Vec3::new(
                r * phi.cos(),
                r * phi.sin(),
                rb * (2.0 * rng.random::<f64>() - 1.0),
            )
        };
        let n = medium.gain_density(&x);
        if n > 0.0 && rng.random::<f64>() * n0 < n {
            return x;
        }
    }
}

/// Distance to the next real collision, or the boundary exit.
pub fn sample_free_path(
    photon: &Photon,
    medium: &Medium,
    spectral: &SpectralModel,
    rng: &mut PhotonRng,
) -> FlightOutcome {
    let Some((s_in, s_out)) = medium.cloud.ray_interval(&photon.pos, &photon.dir) else {
        return FlightOutcome::Escaped {
            exit: photon.pos,
            distance: 0.0,
        };
    };
    let escaped = FlightOutcome::Escaped {
        exit: photon.pos + s_out * photon.dir,
        distance: s_out,
    };
    let majorant = medium.majorant(spectral, photon.delta);
    if majorant <= 0.0 {
        return escaped;
    }
    let sigma = spectral.sigma_sc(photon.delta);
    let mut s = s_in;
    loop {
        s -= (1.0 - rng.random::<f64>()).ln() / majorant;
        if s >= s_out {
            return escaped;
        }
        let at = photon.pos + s * photon.dir;
        let local = medium.scatterer_density(&at) * sigma;
        if rng.random::<f64>() * majorant < local {
            return FlightOutcome::Collision { at, distance: s };
        }
    }
}

/// Multiplies the weight by the gain accumulated over the first `distance`
/// of the current flight. Returns `true` if the weight hit [`WEIGHT_CAP`].
pub fn apply_gain(
    photon: &mut Photon,
    distance: f64,
    medium: &Medium,
    spectral: &SpectralModel,
) -> bool {
    let exponent = medium.gain_exponent(&photon.pos, &photon.dir, distance, spectral);
    if exponent == 0.0 {
        return false;
    }
    scale_weight(photon, exponent)
}

/// `weight *= exp(exponent)` with the overflow cap.
pub fn scale_weight(photon: &mut Photon, exponent: f64) -> bool {
    let w = photon.weight * exponent.exp();
    if w.is_finite() && w <= WEIGHT_CAP {
        photon.weight = w;
        false
    } else {
        photon.weight = WEIGHT_CAP;
        true
    }
}

pub fn collide(
    photon: &Photon,
    spectral: &SpectralModel,
    kind: PhaseFunction,
    rng: &mut PhotonRng,
) -> CollisionOutcome {
    let beta = spectral.beta_inel(photon.delta);
    let converted = beta > 0.0 && rng.random::<f64>() < beta;
    let dir = sample_phase_function(&photon.dir, kind, rng);
    if converted {
        CollisionOutcome::ConvertedAntiStokes(dir)
    } else {
        CollisionOutcome::Elastic(dir)
    }
}

/// Unbiased termination of low-weight histories. Returns `false` when the
/// photon is killed.
pub fn russian_roulette(photon: &mut Photon, cfg: &RunConfig, rng: &mut PhotonRng) -> bool {
    if photon.weight >= cfg.w_min {
        return true;
    }
    if rng.random::<f64>() < cfg.roulette_survive {
        photon.weight /= cfg.roulette_survive;
        true
    } else {
        photon.weight = 0.0;
        photon.alive = false;
        false
    }
}

/// Follows one history to escape, truncation or roulette death.
pub fn trace(
    photon: &mut Photon,
    medium: &Medium,
    spectral: &SpectralModel,
    cfg: &RunConfig,
    rng: &mut PhotonRng,
    tally: &mut Tally,
) {
    let cos_detector = cfg.detector_half_angle.cos();
    while photon.alive {
        let flight = sample_free_path(photon, medium, spectral, rng);
        tally.diverged |= apply_gain(photon, flight.distance(), medium, spectral);
        match flight {
            FlightOutcome::Escaped { exit, .. } => {
                photon.pos = exit;
                tally.record_escape(photon, cos_detector);
                photon.alive = false;
            }
            FlightOutcome::Collision { at, .. } => {
                photon.pos = at;
                tally.record_collision(photon);
                match collide(photon, spectral, cfg.phase_function, rng) {
                    CollisionOutcome::ConvertedAntiStokes(dir) => {
                        // transparent at the shifted frequency: straight out
                        photon.dir = dir;
                        photon.channel = SpectralChannel::AntiStokes;
                        if let Some((_, s_out)) =
                            medium.cloud.ray_interval(&photon.pos, &photon.dir)
                        {
                            photon.pos += s_out * photon.dir;
                        }
                        tally.record_escape(photon, cos_detector);
                        photon.alive = false;
                    }
                    CollisionOutcome::Elastic(dir) => {
                        photon.dir = dir;
                        photon.order += 1;
                        if photon.order > cfg.max_order {
                            tally.record_truncation(photon);
                            photon.alive = false;
                        } else {
                            russian_roulette(photon, cfg, rng);
                        }
                    }
                }
            }
        }
    }
}

fn run_chunk(
    chunk: u64,
    factory: &StreamFactory,
    medium: &Medium,
    spectral: &SpectralModel,
    cfg: &RunConfig,
) -> Tally {
    let mut tally = Tally::default();
    let first = chunk * CHUNK;
    let last = (first + CHUNK).min(cfg.n_photons);
    for index in first..last {
        let mut rng = factory.stream(index);
        let mut photon = emit_source(cfg, medium, &mut rng);
        trace(&mut photon, medium, spectral, cfg, &mut rng, &mut tally);
    }
    tally.photons_launched = last - first;
    tally
}

fn run_all(medium: &Medium, spectral: &SpectralModel, cfg: &RunConfig) -> Tally {
    let factory = StreamFactory::new(cfg.seed);
    let chunks = cfg.n_photons.div_ceil(CHUNK);
    let mut total = Tally::default();
    let mut start = 0;
    while start < chunks {
        let end = (start + BATCH).min(chunks);
        let parts: Vec<Tally> = (start..end)
            .into_par_iter()
            .map(|c| run_chunk(c, &factory, medium, spectral, cfg))
            .collect();
        for part in &parts {
            total.merge(part);
        }
        start = end;
    }
    total
}

/// Runs `cfg.n_photons` independent histories. The result is bitwise
/// reproducible for a given seed, whatever the number of workers.
pub fn run(medium: &Medium, spectral: &SpectralModel, cfg: &RunConfig) -> Result<Tally> {
    medium.validate()?;
    spectral.validate()?;
    cfg.validate(medium)?;
    match cfg.workers {
        None => Ok(run_all(medium, spectral, cfg)),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("run.workers", e.to_string()))?;
            Ok(pool.install(|| run_all(medium, spectral, cfg)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::CloudGeometry;

    fn rng(i: u64) -> PhotonRng {
        StreamFactory::new(99).stream(i)
    }

    #[test]
    fn dipole_inverse_cdf_endpoints() {
        assert!((sample_dipole_cos(0.0) + 1.0).abs() < 1e-12);
        assert!((sample_dipole_cos(1.0) - 1.0).abs() < 1e-12);
        assert!(sample_dipole_cos(0.5).abs() < 1e-12);
        // CDF (3/8)(mu + mu^3/3 + 4/3) evaluated at the sample returns u
        for u in [0.1, 0.3, 0.77, 0.95] {
            let mu = sample_dipole_cos(u);
            let cdf = 0.375 * (mu + mu * mu * mu / 3.0 + 4.0 / 3.0);
            assert!((cdf - u).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_is_unit_and_at_requested_angle() {
        let mut r = rng(0);
        for _ in 0..1000 {
            let axis = sample_phase_function(&Vec3::z(), PhaseFunction::Isotropic, &mut r);
            let mu = 2.0 * r.random::<f64>() - 1.0;
            let out = rotate_about(&axis, mu, r.random::<f64>() * 6.0);
            assert!((out.norm() - 1.0).abs() < 1e-12);
            assert!((out.dot(&axis) - mu).abs() < 1e-9);
        }
        for axis in [Vec3::z(), -Vec3::z(), Vec3::x()] {
            assert!((rotate_about(&axis, 0.3, 1.0).dot(&axis) - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn center_source() {
        let m = Medium::passive(CloudGeometry::uniform(5.0, 1.0));
        let p = emit_source(&RunConfig::default(), &m, &mut rng(1));
        assert_eq!(p.pos, Vec3::zeros());
        assert_eq!((p.weight, p.order), (1.0, 0));
        assert!((p.dir.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_source_lands_in_gain_region() {
        let m = Medium::with_channel(CloudGeometry::gaussian(3.0, 1.0), 0.5);
        let cfg = RunConfig {
            source: SourceKind::ChannelRaman,
            ..Default::default()
        };
        let mut r = rng(2);
        for _ in 0..500 {
            let p = emit_source(&cfg, &m, &mut r);
            assert_eq!(m.region(&p.pos), crate::medium::RegionKind::GainChannel);
        }
        let passive = Medium::passive(m.cloud);
        assert!(cfg.validate(&passive).is_err());
    }

    #[test]
    fn vacuum_escapes_straight() {
        let m = Medium::passive(CloudGeometry::uniform(5.0, 0.0));
        let s = SpectralModel::default();
        let p = Photon::new(Vec3::zeros(), Vec3::y(), 0.0);
        match sample_free_path(&p, &m, &s, &mut rng(3)) {
            FlightOutcome::Escaped { exit, distance } => {
                assert!((exit - 5.0 * Vec3::y()).norm() < 1e-12);
                assert!((distance - 5.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gain_only_cloud_never_collides() {
        let m = Medium::with_channel(CloudGeometry::uniform(5.0, 1.0), f64::INFINITY);
        let s = SpectralModel::default();
        let mut r = rng(4);
        for _ in 0..1000 {
            let p = Photon::new(Vec3::zeros(), sample_dipole_emission(&mut r), 0.0);
            assert!(matches!(
                sample_free_path(&p, &m, &s, &mut r),
                FlightOutcome::Escaped { .. }
            ));
        }
    }

    #[test]
    fn gain_factor_examples() {
        let s = SpectralModel {
            gain_kappa: 0.5,
            rabi_2v: 1.0,
            ..Default::default()
        };
        let m = Medium::with_channel(CloudGeometry::uniform(20.0, 1.0), 1.0);
        // along the axis: L = 1/g = 2 gives one e-fold
        let mut p = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
        assert!(!apply_gain(&mut p, 2.0, &m, &s));
        assert!((p.weight - std::f64::consts::E).abs() < 1e-12);
        // perpendicular ray missing the channel
        let mut p = Photon::new(Vec3::new(0.0, 3.0, 0.0), Vec3::x(), 0.0);
        apply_gain(&mut p, 10.0, &m, &s);
        assert_eq!(p.weight, 1.0);
        // segments add: exp(0.5 * (1 + 2))
        let mut p = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
        scale_weight(&mut p, 0.5 * 1.0);
        scale_weight(&mut p, 0.5 * 2.0);
        assert!((p.weight - 1.5f64.exp()).abs() < 1e-12);
        // unpumped
        let mut p = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
        apply_gain(&mut p, 2.0, &m, &SpectralModel::default());
        assert_eq!(p.weight, 1.0);
    }

    #[test]
    fn weight_overflow_is_capped() {
        let mut p = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
        assert!(scale_weight(&mut p, 800.0));
        assert_eq!(p.weight, WEIGHT_CAP);
    }

    #[test]
    fn collision_branching_extremes() {
        let mut r = rng(5);
        let p = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
        let none = SpectralModel::default();
        let all = SpectralModel {
            beta0: 1.0,
            ..Default::default()
        };
        for _ in 0..1000 {
            assert!(matches!(
                collide(&p, &none, PhaseFunction::Dipole, &mut r),
                CollisionOutcome::Elastic(_)
            ));
            assert!(matches!(
                collide(&p, &all, PhaseFunction::Dipole, &mut r),
                CollisionOutcome::ConvertedAntiStokes(_)
            ));
        }
    }

    #[test]
    fn roulette_examples() {
        let cfg = RunConfig::default();
        let mut r = rng(6);
        let mut p = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
        p.weight = 1e-3;
        assert!(russian_roulette(&mut p, &cfg, &mut r));
        assert_eq!(p.weight, 1e-3);
        let mut survived = None;
        for _ in 0..200 {
            let mut p = Photon::new(Vec3::zeros(), Vec3::z(), 0.0);
            p.weight = 1e-5;
            if russian_roulette(&mut p, &cfg, &mut r) {
                survived = Some(p.weight);
                break;
            } else {
                assert!(!p.alive);
            }
        }
        assert!((survived.unwrap() - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn empty_medium_gives_order_zero_escape() {
        let m = Medium::passive(CloudGeometry::uniform(5.0, 0.0));
        let cfg = RunConfig {
            n_photons: 100,
            ..Default::default()
        };
        let t = run(&m, &SpectralModel::default(), &cfg).unwrap();
        assert_eq!(t.elastic.by_order, vec![100.0]);
        assert_eq!(t.photons_launched, 100);
    }

    #[test]
    fn zero_photons_is_empty() {
        let m = Medium::passive(CloudGeometry::uniform(5.0, 1.0));
        let cfg = RunConfig {
            n_photons: 0,
            ..Default::default()
        };
        assert_eq!(
            run(&m, &SpectralModel::default(), &cfg).unwrap(),
            Tally::default()
        );
    }

    #[test]
    fn full_conversion_escapes_at_low_order() {
        let m = Medium::passive(CloudGeometry::uniform(25.0, 1.0));
        let s = SpectralModel {
            beta0: 1.0,
            ..Default::default()
        };
        let cfg = RunConfig {
            n_photons: 2000,
            ..Default::default()
        };
        let t = run(&m, &s, &cfg).unwrap();
        assert_eq!(t.anti_stokes.total(), 2000.0);
        assert_eq!(t.anti_stokes.by_order.len(), 1);
        assert_eq!(t.elastic.total(), 0.0);
    }
}
