//! Monte-Carlo simulation of Raman light that is emitted, trapped and
//! amplified inside a cold alkali-atom cloud.
//!
//! The cloud plays two roles at once. Atoms in the F0=3 ground level scatter
//! the emitted light elastically on the closed F0=3 -> F=4 transition and
//! trap it; atoms pumped into F0=2 amplify it by stimulated Raman emission.
//! When the trapped light gains more per scattering order than it loses
//! through the surface and through inelastic channels, the expansion of the
//! emitted intensity over scattering orders stops converging. That
//! instability is the precursor of random lasing, and this crate locates
//! it.
//!
//! * [`spectral`] holds cross sections, branching, gain and kinetic lengths.
//! * [`medium`] describes the cloud, its gain channel and line integrals.
//! * [`transport`] runs the photon histories.
//! * [`analysis`] turns tallies into stability verdicts, thresholds and
//!   spectra.
//! * [`config`] and [`experiment`] read configuration files and write
//!   result tables.

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiment;
pub mod medium;
pub mod rng;
pub mod spectral;
pub mod transport;
pub mod validate;

pub use error::{Error, Result};

/// Positions and directions.
pub type Vec3 = nalgebra::Vector3<f64>;
