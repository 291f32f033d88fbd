//! Cloud geometry, the cylindrical gain channel and line integrals through
//! them.
//!
//! The channel axis is the z-axis through the cloud centre. Atoms inside the
//! channel are pumped into F0=2 and only amplify; atoms outside it stay in
//! F0=3 and scatter. In overlap mode gain and scattering coexist throughout
//! the cloud, which is the configuration the diffusive threshold formula
//! assumes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::spectral::{KineticLengths, SpectralModel};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionKind {
    GainChannel,
    Trap,
    Vacuum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CloudShape {
    UniformSphere {
        radius: f64,
    },
    /// Gaussian profile truncated at `cutoff` so escape is well defined.
    Gaussian {
        sigma_r: f64,
        cutoff: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudGeometry {
    pub shape: CloudShape,
    /// Peak density.
    pub n0: f64,
}

impl CloudGeometry {
    pub fn uniform(radius: f64, n0: f64) -> Self {
        CloudGeometry {
            shape: CloudShape::UniformSphere { radius },
            n0,
        }
    }

    /// Gaussian cloud with the default cutoff of four standard deviations.
    pub fn gaussian(sigma_r: f64, n0: f64) -> Self {
        CloudGeometry {
            shape: CloudShape::Gaussian {
                sigma_r,
                cutoff: 4.0 * sigma_r,
            },
            n0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n0 >= 0.0 && self.n0.is_finite()) {
            return Err(Error::Domain {
                what: "n0 (non-negative)",
                value: self.n0,
            });
        }
        match self.shape {
            CloudShape::UniformSphere { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Domain {
                        what: "cloud radius",
                        value: radius,
                    });
                }
            }
            CloudShape::Gaussian { sigma_r, cutoff } => {
                if !(sigma_r > 0.0 && sigma_r.is_finite()) {
                    return Err(Error::Domain {
                        what: "sigma_r",
                        value: sigma_r,
                    });
                }
                if !(cutoff >= 3.0 * sigma_r && cutoff.is_finite()) {
                    return Err(Error::Domain {
                        what: "gaussian cutoff (at least 3 sigma_r)",
                        value: cutoff,
                    });
                }
            }
        }
        Ok(())
    }

    /// Radius beyond which the density vanishes.
    pub fn boundary_radius(&self) -> f64 {
        match self.shape {
            CloudShape::UniformSphere { radius } => radius,
            CloudShape::Gaussian { cutoff, .. } => cutoff,
        }
    }

    pub fn density(&self, x: &Vec3) -> f64 {
        let r2 = x.norm_squared();
        let rb = self.boundary_radius();
        if r2 >= rb * rb {
            return 0.0;
        }
        match self.shape {
            CloudShape::UniformSphere { .. } => self.n0,
            CloudShape::Gaussian { sigma_r, .. } => {
                self.n0 * (-r2 / (2.0 * sigma_r * sigma_r)).exp()
            }
        }
    }

    /// Parameter interval `[s_in, s_out]`, clipped to `s >= 0`, over which
    /// `x + s dir` is inside the cloud.
    pub fn ray_interval(&self, x: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        let rb = self.boundary_radius();
        let b = x.dot(dir);
        let c = x.norm_squared() - rb * rb;
        let disc = b * b - c;
        if disc <= 0.0 {
            return None;
        }
        let root = disc.sqrt();
        let s_out = -b + root;
        if s_out <= 0.0 {
            return None;
        }
        Some(((-b - root).max(0.0), s_out))
    }

    /// Integral of the density along `x + s dir` for `s` in `[s0, s1]`, both
    /// inside the cloud.
    pub fn column_density(&self, x: &Vec3, dir: &Vec3, s0: f64, s1: f64) -> f64 {
        if s1 <= s0 {
            return 0.0;
        }
        match self.shape {
            CloudShape::UniformSphere { .. } => self.n0 * (s1 - s0),
            CloudShape::Gaussian { sigma_r, .. } => {
                // |x + s d|^2 = (s + b)^2 + (|x|^2 - b^2)
                let b = x.dot(dir);
                let perp2 = (x.norm_squared() - b * b).max(0.0);
                let scale = FRAC_1_SQRT_2 / sigma_r;
                let amplitude = self.n0 * (-perp2 / (2.0 * sigma_r * sigma_r)).exp();
                amplitude
                    * sigma_r
                    * (PI / 2.0).sqrt()
                    * (erf((s1 + b) * scale) - erf((s0 + b) * scale))
            }
        }
    }

    /// Through-centre diameter column density times `sigma`.
    pub fn diameter_depth(&self, sigma: f64) -> f64 {
        let origin = Vec3::zeros();
        let rb = self.boundary_radius();
        let dir = Vec3::x();
        sigma * self.column_density(&(origin - rb * dir), &dir, 0.0, 2.0 * rb)
    }

    /// Same profile stretched by `factor` at unchanged peak density.
    pub fn scaled(&self, factor: f64) -> Self {
        let shape = match self.shape {
            CloudShape::UniformSphere { radius } => CloudShape::UniformSphere {
                radius: radius * factor,
            },
            CloudShape::Gaussian { sigma_r, cutoff } => CloudShape::Gaussian {
                sigma_r: sigma_r * factor,
                cutoff: cutoff * factor,
            },
        };
        CloudGeometry { shape, ..*self }
    }

    /// Linear size parameter: the radius, or `sigma_r` for a Gaussian.
    pub fn size(&self) -> f64 {
        match self.shape {
            CloudShape::UniformSphere { radius } => radius,
            CloudShape::Gaussian { sigma_r, .. } => sigma_r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGeometry {
    /// Radius about the z-axis. Zero disables the channel, infinity makes
    /// the whole cloud the channel.
    pub radius: f64,
}

impl ChannelGeometry {
    pub const NONE: ChannelGeometry = ChannelGeometry { radius: 0.0 };
    pub const WHOLE_CLOUD: ChannelGeometry = ChannelGeometry {
        radius: f64::INFINITY,
    };

    pub fn contains(&self, x: &Vec3) -> bool {
        x.x * x.x + x.y * x.y < self.radius * self.radius
    }

    /// Parameter interval over which the infinite cylinder contains the ray.
    fn ray_interval(&self, x: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
        if self.radius <= 0.0 {
            return None;
        }
        if self.radius.is_infinite() {
            return Some((f64::NEG_INFINITY, f64::INFINITY));
        }
        let a = dir.x * dir.x + dir.y * dir.y;
        let c = x.x * x.x + x.y * x.y - self.radius * self.radius;
        if a < 1e-300 {
            return (c < 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY));
        }
        let b = x.x * dir.x + x.y * dir.y;
        let disc = b * b - a * c;
        if disc <= 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some(((-b - root) / a, (-b + root) / a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub cloud: CloudGeometry,
    pub channel: ChannelGeometry,
    /// Fraction of atoms outside the channel that remain in F0=3.
    pub trap_fraction: f64,
    /// Gain coexists with scattering everywhere in the cloud.
    pub overlap_gain: bool,
}

impl Medium {
    /// Passive cloud without a gain channel.
    pub fn passive(cloud: CloudGeometry) -> Self {
        Medium {
            cloud,
            channel: ChannelGeometry::NONE,
            trap_fraction: 1.0,
            overlap_gain: false,
        }
    }

    pub fn with_channel(cloud: CloudGeometry, radius: f64) -> Self {
        Medium {
            channel: ChannelGeometry { radius },
            ..Medium::passive(cloud)
        }
    }

    /// Uniform gain throughout a scattering cloud.
    pub fn overlap(cloud: CloudGeometry) -> Self {
        Medium {
            overlap_gain: true,
            ..Medium::passive(cloud)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cloud.validate()?;
        if !(self.channel.radius >= 0.0) {
            return Err(Error::Domain {
                what: "channel radius (non-negative)",
                value: self.channel.radius,
            });
        }
        if !(0.0..=1.0).contains(&self.trap_fraction) {
            return Err(Error::Domain {
                what: "trap_fraction (within [0, 1])",
                value: self.trap_fraction,
            });
        }
        Ok(())
    }

    pub fn density(&self, x: &Vec3) -> f64 {
        self.cloud.density(x)
    }

    pub fn region(&self, x: &Vec3) -> RegionKind {
        if self.cloud.density(x) == 0.0 {
            RegionKind::Vacuum
        } else if self.overlap_gain || self.channel.contains(x) {
            RegionKind::GainChannel
        } else {
            RegionKind::Trap
        }
    }

    /// Density of F0=3 scatterers.
    pub fn scatterer_density(&self, x: &Vec3) -> f64 {
        match self.region(x) {
            RegionKind::Trap => self.trap_fraction * self.cloud.density(x),
            RegionKind::GainChannel if self.overlap_gain => {
                self.trap_fraction * self.cloud.density(x)
            }
            _ => 0.0,
        }
    }

    /// Density of pumped (amplifying) atoms.
    pub fn gain_density(&self, x: &Vec3) -> f64 {
        match self.region(x) {
            RegionKind::GainChannel => self.cloud.density(x),
            _ => 0.0,
        }
    }

    pub fn kinetics_at(&self, x: &Vec3, spectral: &SpectralModel, delta: f64) -> KineticLengths {
        spectral.kinetic_lengths_mixed(delta, self.scatterer_density(x), self.gain_density(x))
    }

    /// Woodcock bound on the scattering coefficient.
    pub fn majorant(&self, spectral: &SpectralModel, delta: f64) -> f64 {
        self.cloud.n0 * spectral.sigma_sc(delta)
    }

    pub fn boundary_radius(&self) -> f64 {
        self.cloud.boundary_radius()
    }

    /// Sorted, disjoint intervals within `[0, s_max]` where `x + s dir` lies
    /// in the gain region.
    pub fn ray_channel_segments(&self, x: &Vec3, dir: &Vec3, s_max: f64) -> Vec<(f64, f64)> {
        let Some((c0, c1)) = self.cloud.ray_interval(x, dir) else {
            return Vec::new();
        };
        let (g0, g1) = if self.overlap_gain {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            match self.channel.ray_interval(x, dir) {
                Some(iv) => iv,
                None => return Vec::new(),
            }
        };
        let lo = c0.max(g0).max(0.0);
        let hi = c1.min(g1).min(s_max);
        if hi > lo {
            vec![(lo, hi)]
        } else {
            Vec::new()
        }
    }

    /// Gain exponent accumulated along `x + s dir` for `s` in `[0, s_max]`.
    pub fn gain_exponent(&self, x: &Vec3, dir: &Vec3, s_max: f64, spectral: &SpectralModel) -> f64 {
        let per_atom = spectral.gain_per_atom();
        if per_atom == 0.0 {
            return 0.0;
        }
        self.ray_channel_segments(x, dir, s_max)
            .into_iter()
            .map(|(a, b)| per_atom * self.cloud.column_density(x, dir, a, b))
            .sum()
    }

    /// Scattering optical depth from `x` to infinity along `dir`. Gain
    /// regions do not attenuate and are excluded.
    pub fn optical_depth_along(
        &self,
        x: &Vec3,
        dir: &Vec3,
        spectral: &SpectralModel,
        delta: f64,
    ) -> f64 {
        let Some((c0, c1)) = self.cloud.ray_interval(x, dir) else {
            return 0.0;
        };
        let mut column = self.cloud.column_density(x, dir, c0, c1);
        if !self.overlap_gain {
            for (a, b) in self.ray_channel_segments(x, dir, c1) {
                column -= self.cloud.column_density(x, dir, a, b);
            }
        }
        self.trap_fraction * spectral.sigma_sc(delta) * column.max(0.0)
    }

    /// Resonant through-centre optical depth of the cloud, ignoring the
    /// channel.
    pub fn b0(&self, spectral: &SpectralModel) -> f64 {
        self.cloud.diameter_depth(spectral.sigma0)
    }

    /// Cloud and channel stretched together by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Medium {
            cloud: self.cloud.scaled(factor),
            channel: ChannelGeometry {
                radius: self.channel.radius * factor,
            },
            ..*self
        }
    }

    /// The same medium resized to optical depth `b0`.
    pub fn with_b0(&self, b0: f64, spectral: &SpectralModel) -> Result<Self> {
        let current = self.b0(spectral);
        if !(b0 > 0.0 && b0.is_finite()) || current <= 0.0 {
            return Err(Error::Domain {
                what: "b0",
                value: b0,
            });
        }
        Ok(self.scaled(b0 / current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    /// Adaptive Simpson, kept independent of the closed-form column density.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn rec(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
            }
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        rec(
            f,
            a,
            b,
            fa,
            fm,
            fb,
            (b - a) / 6.0 * (fa + 4.0 * fm + fb),
            tol,
            40,
        )
    }

    #[test]
    fn density_examples() {
        let uni = CloudGeometry::uniform(5.0, 1.0);
        assert_eq!(uni.density(&v(4.9, 0.0, 0.0)), 1.0);
        assert_eq!(uni.density(&v(0.0, 5.1, 0.0)), 0.0);
        let gau = CloudGeometry::gaussian(2.0, 1.0);
        assert!((gau.density(&v(0.0, 0.0, 2.0)) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(gau.density(&v(8.01, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn region_examples() {
        let m = Medium::with_channel(CloudGeometry::uniform(5.0, 1.0), 1.0);
        assert_eq!(m.region(&v(0.5, 0.0, 3.0)), RegionKind::GainChannel);
        assert_eq!(m.region(&v(2.0, 0.0, 0.0)), RegionKind::Trap);
        assert_eq!(m.region(&v(0.0, 0.0, 6.0)), RegionKind::Vacuum);
        let o = Medium::overlap(CloudGeometry::uniform(5.0, 1.0));
        assert_eq!(o.region(&v(3.0, 3.0, 0.0)), RegionKind::GainChannel);
        assert_eq!(o.scatterer_density(&v(3.0, 3.0, 0.0)), 1.0);
        assert_eq!(m.scatterer_density(&v(0.5, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn optical_depth_examples() {
        let s = SpectralModel::default();
        let m = Medium::passive(CloudGeometry::uniform(5.0, 1.0));
        let z = Vec3::z();
        assert!((m.optical_depth_along(&Vec3::zeros(), &z, &s, 0.0) - 5.0).abs() < 1e-12);
        assert!((m.optical_depth_along(&v(0.0, 0.0, -5.0), &z, &s, 0.0) - 10.0).abs() < 1e-12);
        assert!((m.optical_depth_along(&v(0.0, 0.0, -7.0), &z, &s, 0.0) - 10.0).abs() < 1e-12);
        // halved by detuning half a linewidth
        assert!((m.optical_depth_along(&Vec3::zeros(), &z, &s, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn channel_excluded_from_attenuation() {
        let s = SpectralModel::default();
        let m = Medium::with_channel(CloudGeometry::uniform(5.0, 1.0), 1.0);
        let x = Vec3::x();
        // diameter along x crosses the channel over a chord of length 2
        let tau = m.optical_depth_along(&v(-6.0, 0.0, 0.0), &x, &s, 0.0);
        assert!((tau - 8.0).abs() < 1e-12);
        // along the axis nothing scatters
        assert_eq!(
            m.optical_depth_along(&v(0.0, 0.0, -6.0), &Vec3::z(), &s, 0.0),
            0.0
        );
    }

    #[test]
    fn gaussian_depth_matches_quadrature() {
        let s = SpectralModel::default();
        let cloud = CloudGeometry::gaussian(2.0, 1.0);
        let m = Medium::passive(cloud);
        let dir = v(1.0, 2.0, -0.5).normalize();
        let tau = m.optical_depth_along(&Vec3::zeros(), &dir, &s, 0.0);
        let quad = simpson(&|t| cloud.density(&(t * dir)), 0.0, 8.0, 1e-12);
        assert!((tau - quad).abs() < 1e-8, "{tau} vs {quad}");
        // analytic limit without the cutoff: sigma_r sqrt(pi/2)
        let uncut = 2.0 * (PI / 2.0).sqrt();
        assert!((tau - uncut).abs() / uncut < 1e-4);

        // off-centre chord
        let x0 = v(1.0, -0.5, 0.7);
        let tau = m.optical_depth_along(&x0, &dir, &s, 0.0);
        let (_, s1) = cloud.ray_interval(&x0, &dir).unwrap();
        let quad = simpson(&|t| cloud.density(&(x0 + t * dir)), 0.0, s1, 1e-12);
        assert!((tau - quad).abs() < 1e-8, "{tau} vs {quad}");
    }

    #[test]
    fn b0_examples() {
        let s = SpectralModel::default();
        assert!((Medium::passive(CloudGeometry::uniform(10.0, 1.0)).b0(&s) - 20.0).abs() < 1e-12);
        assert!((Medium::passive(CloudGeometry::uniform(15.0, 1.0)).b0(&s) - 30.0).abs() < 1e-12);
        let g = Medium::passive(CloudGeometry::gaussian(4.0, 1.0));
        let quad = simpson(&|t| g.cloud.density(&v(t, 0.0, 0.0)), -16.0, 16.0, 1e-12);
        let uncut = (2.0 * PI).sqrt() * 4.0;
        assert!((uncut - 10.026_513_098_524_001).abs() < 1e-12);
        assert!((g.b0(&s) - quad).abs() < 1e-8);
        assert!((g.b0(&s) - uncut).abs() / uncut < 1e-4);
        let half = Medium::passive(CloudGeometry::gaussian(4.0, 0.5));
        assert!((half.b0(&s) - 0.5 * g.b0(&s)).abs() < 1e-12);
    }

    #[test]
    fn channel_segment_examples() {
        let m = Medium::with_channel(CloudGeometry::uniform(20.0, 1.0), 1.0);
        assert_eq!(
            m.ray_channel_segments(&Vec3::zeros(), &Vec3::z(), 7.0),
            vec![(0.0, 7.0)]
        );
        assert!(m
            .ray_channel_segments(&v(0.0, 2.0, 0.0), &Vec3::x(), 10.0)
            .is_empty());
        let seg = m.ray_channel_segments(&v(-3.0, 0.0, 0.0), &Vec3::x(), 10.0);
        assert_eq!(seg.len(), 1);
        assert!((seg[0].0 - 2.0).abs() < 1e-12 && (seg[0].1 - 4.0).abs() < 1e-12);
        // clipped by the cloud boundary
        let seg = m.ray_channel_segments(&Vec3::zeros(), &Vec3::z(), 100.0);
        assert_eq!(seg, vec![(0.0, 20.0)]);
        assert!(Medium::passive(m.cloud)
            .ray_channel_segments(&Vec3::zeros(), &Vec3::z(), 5.0)
            .is_empty());
    }

    #[test]
    fn gain_exponent_uses_column_density() {
        let s = SpectralModel {
            gain_kappa: 0.5,
            rabi_2v: 1.0,
            ..Default::default()
        };
        let m = Medium::with_channel(CloudGeometry::uniform(20.0, 1.0), 1.0);
        let e = m.gain_exponent(&v(-3.0, 0.0, 0.0), &Vec3::x(), 10.0, &s);
        assert!((e - 1.0).abs() < 1e-12);
        let e = m.gain_exponent(&v(-3.0, 0.0, 0.0), &Vec3::x(), 3.0, &s);
        assert!((e - 0.5).abs() < 1e-12);
    }

    #[test]
    fn majorant_examples() {
        let s = SpectralModel::default();
        let m = Medium::passive(CloudGeometry::uniform(5.0, 2.0));
        assert_eq!(m.majorant(&s, 0.0), 2.0);
        assert_eq!(m.majorant(&s, 0.5), 1.0);
        let g = Medium::passive(CloudGeometry::gaussian(2.0, 3.0));
        assert_eq!(g.majorant(&s, 0.0), g.density(&Vec3::zeros()));
    }

    #[test]
    fn validation() {
        assert!(CloudGeometry::uniform(0.0, 1.0).validate().is_err());
        assert!(CloudGeometry::uniform(1.0, -1.0).validate().is_err());
        let cut = CloudGeometry {
            shape: CloudShape::Gaussian {
                sigma_r: 1.0,
                cutoff: 2.0,
            },
            n0: 1.0,
        };
        assert!(cut.validate().is_err());
        let mut m = Medium::passive(CloudGeometry::uniform(1.0, 1.0));
        m.trap_fraction = 1.5;
        assert!(m.validate().is_err());
        m.trap_fraction = 1.0;
        m.channel.radius = -1.0;
        assert!(m.validate().is_err());
    }

    fn medium() -> impl Strategy<Value = Medium> {
        (
            prop_oneof![
                (0.5f64..20.0).prop_map(|r| CloudGeometry::uniform(r, 1.0)),
                (0.5f64..5.0).prop_map(|s| CloudGeometry::gaussian(s, 1.0)),
            ],
            prop_oneof![Just(0.0), 0.1f64..5.0, Just(f64::INFINITY)],
            any::<bool>(),
        )
            .prop_map(|(cloud, radius, overlap_gain)| Medium {
                overlap_gain,
                ..Medium::with_channel(cloud, radius)
            })
    }

    fn point() -> impl Strategy<Value = Vec3> {
        (-25.0f64..25.0, -25.0f64..25.0, -25.0f64..25.0).prop_map(|(x, y, z)| v(x, y, z))
    }

    fn direction() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, 0.0f64..2.0 * PI).prop_map(|(mu, phi)| {
            let st = (1.0 - mu * mu).sqrt();
            v(st * phi.cos(), st * phi.sin(), mu)
        })
    }

    proptest! {
        #[test]
        fn region_partition(m in medium(), x in point()) {
            let r = m.region(&x);
            prop_assert_eq!(r == RegionKind::Vacuum, m.density(&x) == 0.0);
            if r == RegionKind::GainChannel {
                prop_assert!(m.density(&x) > 0.0);
            }
        }

        #[test]
        fn segments_sorted_and_bounded(m in medium(), x in point(), d in direction(), s_max in 0.0f64..60.0) {
            let segs = m.ray_channel_segments(&x, &d, s_max);
            let mut prev = 0.0;
            let mut total = 0.0;
            for &(a, b) in &segs {
                prop_assert!(a >= prev && b > a && b <= s_max);
                prev = b;
                total += b - a;
                let mid = x + 0.5 * (a + b) * d;
                prop_assert_eq!(m.region(&mid), RegionKind::GainChannel);
            }
            prop_assert!(total <= s_max);
        }

        #[test]
        fn depth_is_path_consistent(m in medium(), x in point(), d in direction()) {
            let s = SpectralModel::default();
            let far = 4.0 * m.boundary_radius() + 60.0;
            let start = x - far * d;
            let end = x + far * d;
            let forward = m.optical_depth_along(&start, &d, &s, 0.0);
            let backward = m.optical_depth_along(&end, &(-d), &s, 0.0);
            prop_assert!((forward - backward).abs() <= 1e-6 * (1.0 + forward));
            let split = m.optical_depth_along(&x, &d, &s, 0.0) + m.optical_depth_along(&x, &(-d), &s, 0.0);
            prop_assert!((forward - split).abs() <= 1e-6 * (1.0 + forward));
        }
    }
}
