//! Frequency response of the atomic cloud at the Raman emission line.
//!
//! Frequencies are measured in units of the natural linewidth `gamma` of the
//! closed F0=3 -> F=4 transition and cross sections in units of the resonant
//! elastic cross section `sigma0`. With a peak density of one, the resonant
//! mean free path is the length unit.
//!
//! Three responses are modelled:
//!
//! * the elastic cross section on the closed transition, a Lorentzian in the
//!   emission detuning;
//! * the inverse anti-Stokes branching, the probability that a collision
//!   converts the photon to a frequency at which the cloud is transparent;
//! * the Raman gain of atoms prepared in F0=2, quadratic in the control-mode
//!   Rabi parameter and Lorentzian in the control detuning.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::medium::RegionKind;

/// Shape of the anti-Stokes branching fraction versus emission detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    Constant,
    /// Quasi-energy resonance centred on the control detuning, with full
    /// width `width`.
    Lorentzian {
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralModel {
    /// Natural linewidth; the frequency unit.
    pub gamma: f64,
    /// Resonant elastic cross section.
    pub sigma0: f64,
    /// Control-mode Rabi parameter 2V, in the same units as `gamma`.
    pub rabi_2v: f64,
    /// Control-mode detuning from the F0=2 -> F=4 transition.
    pub delta_c: f64,
    /// Maps `(2V/gamma)^2` onto the peak gain per atom in units of `sigma0`.
    pub gain_kappa: f64,
    /// Full width of the gain resonance versus `delta_c`.
    pub gain_width: f64,
    /// Peak anti-Stokes branching fraction.
    pub beta0: f64,
    pub beta_mode: BetaMode,
}

impl Default for SpectralModel {
    fn default() -> Self {
        SpectralModel {
            gamma: 1.0,
            sigma0: 1.0,
            rabi_2v: 0.0,
            delta_c: 0.0,
            gain_kappa: 0.0,
            gain_width: 2.0,
            beta0: 0.0,
            beta_mode: BetaMode::Constant,
        }
    }
}

impl SpectralModel {
    pub fn validate(&self) -> Result<()> {
        positive("gamma", self.gamma)?;
        positive("sigma0", self.sigma0)?;
        positive("gain_width", self.gain_width)?;
        if let BetaMode::Lorentzian { width } = self.beta_mode {
            positive("quasi_width", width)?;
        }
        if !(0.0..=1.0).contains(&self.beta0) {
            return Err(Error::Domain {
                what: "beta0 (within [0, 1])",
                value: self.beta0,
            });
        }
        if !(self.gain_kappa >= 0.0 && self.gain_kappa.is_finite()) {
            return Err(Error::Domain {
                what: "gain_kappa (non-negative)",
                value: self.gain_kappa,
            });
        }
        if !self.rabi_2v.is_finite() || !self.delta_c.is_finite() {
            return Err(Error::Domain {
                what: "rabi_2v and delta_c (finite)",
                value: if self.rabi_2v.is_finite() {
                    self.delta_c
                } else {
                    self.rabi_2v
                },
            });
        }
        Ok(())
    }

    /// Elastic cross section at emission detuning `delta`.
    pub fn sigma_sc(&self, delta: f64) -> f64 {
        let x = delta / self.gamma;
        self.sigma0 / (1.0 + 4.0 * x * x)
    }

    /// Probability that a collision at detuning `delta` goes to the inverse
    /// anti-Stokes channel.
    pub fn beta_inel(&self, delta: f64) -> f64 {
        match self.beta_mode {
            BetaMode::Constant => self.beta0,
            BetaMode::Lorentzian { width } => {
                let x = (delta - self.delta_c) / width;
                self.beta0 / (1.0 + 4.0 * x * x)
            }
        }
    }

    /// Raman gain cross section per pumped atom. The gain is taken to be
    /// flat across the (monochromatic) emission line.
    pub fn gain_per_atom(&self) -> f64 {
        let pump = self.rabi_2v / self.gamma;
        let x = self.delta_c / self.gain_width;
        self.sigma0 * self.gain_kappa * pump * pump / (1.0 + 4.0 * x * x)
    }

    /// Gain coefficient of a region holding `density` pumped atoms.
    pub fn gain_coeff(&self, density: f64) -> f64 {
        density * self.gain_per_atom()
    }

    /// Kinetic lengths for a region of a single kind.
    pub fn kinetic_lengths(&self, delta: f64, density: f64, region: RegionKind) -> KineticLengths {
        match region {
            RegionKind::Trap => self.kinetic_lengths_mixed(delta, density, 0.0),
            RegionKind::GainChannel => self.kinetic_lengths_mixed(delta, 0.0, density),
            RegionKind::Vacuum => self.kinetic_lengths_mixed(delta, 0.0, 0.0),
        }
    }

    /// Kinetic lengths where `scatter_density` F0=3 atoms and `gain_density`
    /// pumped atoms share the same volume.
    ///
    /// Anti-Stokes conversion is an event split at each collision, so the
    /// extinction reported for the scatterers is `l_sc^-1 / (1 - beta)`: the
    /// loss length it implies corresponds to `1 / beta` collisions on average
    /// before conversion.
    pub fn kinetic_lengths_mixed(
        &self,
        delta: f64,
        scatter_density: f64,
        gain_density: f64,
    ) -> KineticLengths {
        let l_sc_inv = scatter_density * self.sigma_sc(delta);
        let beta = self.beta_inel(delta);
        let scatter_extinction = if l_sc_inv == 0.0 {
            0.0
        } else if beta < 1.0 {
            l_sc_inv / (1.0 - beta)
        } else {
            f64::INFINITY
        };
        KineticLengths::new(scatter_extinction - self.gain_coeff(gain_density), l_sc_inv)
    }
}

fn positive(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

/// Inverse extinction, scattering and loss lengths at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticLengths {
    /// Negative when gain outweighs all losses.
    pub l_ex_inv: f64,
    pub l_sc_inv: f64,
    /// `l_ex_inv - l_sc_inv`; a negative value is an inverse gain length.
    pub l_ls_inv: f64,
    /// Transport length. Both supported phase functions have zero mean
    /// cosine, so this is the scattering length.
    pub l_tr: f64,
}

impl KineticLengths {
    pub fn new(l_ex_inv: f64, l_sc_inv: f64) -> Self {
        KineticLengths {
            l_ex_inv,
            l_sc_inv,
            l_ls_inv: l_ex_inv - l_sc_inv,
            l_tr: l_sc_inv.recip(),
        }
    }

    /// Distance of e-fold amplification, if the point has net gain.
    pub fn gain_length(&self) -> Option<f64> {
        (self.l_ls_inv < 0.0).then(|| -self.l_ls_inv.recip())
    }

    /// Mean distance to an inelastic loss, if the point is lossy.
    pub fn loss_length(&self) -> Option<f64> {
        (self.l_ls_inv > 0.0).then(|| self.l_ls_inv.recip())
    }
}

/// Minimal radius of a diffusive gain medium that can lase:
/// `pi * sqrt(l_tr * l_g / 3)`.
pub fn letokhov_radius(l_tr: f64, l_g: f64) -> Result<f64> {
    positive("transport length", l_tr)?;
    positive("gain length", l_g)?;
    Ok(PI * (l_tr * l_g / 3.0).sqrt())
}

/// Gain length at which a medium of radius `radius` sits exactly at the
/// diffusive lasing threshold: `3 r^2 / (pi^2 l_tr)`.
pub fn letokhov_gain_length(radius: f64, l_tr: f64) -> Result<f64> {
    positive("radius", radius)?;
    positive("transport length", l_tr)?;
    Ok(3.0 * radius * radius / (PI * PI * l_tr))
}
