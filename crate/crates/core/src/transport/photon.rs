use crate::Vec3;

/// Spectral channel a photon escapes in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectralChannel {
    /// Raman light at the emission frequency, trapped by elastic scattering.
    RamanElastic,
    /// Shifted by inverse anti-Stokes scattering; the cloud is transparent
    /// to it.
    AntiStokes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Photon {
    pub pos: Vec3,
    /// Unit propagation direction.
    pub dir: Vec3,
    /// Emission detuning from the closed transition.
    pub delta: f64,
    pub weight: f64,
    /// Elastic scatterings so far: the index of the correlation-function
    /// term this history contributes to.
    pub order: u32,
    pub channel: SpectralChannel,
    pub alive: bool,
}

impl Photon {
    pub fn new(pos: Vec3, dir: Vec3, delta: f64) -> Self {
        Photon {
            pos,
            dir,
            delta,
            weight: 1.0,
            order: 0,
            channel: SpectralChannel::RamanElastic,
            alive: true,
        }
    }
}
