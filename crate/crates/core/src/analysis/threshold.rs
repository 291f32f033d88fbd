//! Locating the instability point by bisection on a control parameter.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::stability::{classify_stability, StabilityOptions, StabilityReport, Verdict};
use super::Scenario;
use crate::error::{Error, Result};
use crate::medium::CloudShape;
use crate::Vec3;

/// Extrapolation length of the diffusive boundary condition, in units of
/// the transport length.
const EXTRAPOLATION: f64 = 0.71;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    /// Control-mode Rabi parameter `2V`.
    PumpRabi,
    /// Peak gain coefficient at the cloud centre.
    GainG0,
    /// Cloud radius, or `sigma_r` for a Gaussian cloud. The channel is
    /// scaled along with it.
    CloudRadius,
}

impl ScanParam {
    /// The scenario with the scanned parameter set to `value`.
    pub fn apply(&self, base: &Scenario, value: f64) -> Result<Scenario> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::Domain {
                what: "scanned parameter (non-negative)",
                value,
            });
        }
        let mut s = base.clone();
        match self {
            ScanParam::PumpRabi => s.spectral.rabi_2v = value,
            ScanParam::GainG0 => {
                let unit = unit_kappa_gain(base);
                if !(unit > 0.0) {
                    return Err(Error::config(
                        "spectral.rabi_2v",
                        "scanning gain_g0 needs a nonzero pump and pumped atoms at the centre",
                    ));
                }
                s.spectral.gain_kappa = value / unit;
            }
            ScanParam::CloudRadius => {
                if value == 0.0 {
                    return Err(Error::Domain {
                        what: "cloud radius",
                        value,
                    });
                }
                s.medium = base.medium.scaled(value / base.medium.cloud.size());
            }
        }
        Ok(s)
    }

    /// Current value of the parameter in `scenario`.
    pub fn value(&self, scenario: &Scenario) -> f64 {
        match self {
            ScanParam::PumpRabi => scenario.spectral.rabi_2v,
            ScanParam::GainG0 => centre_gain(scenario),
            ScanParam::CloudRadius => scenario.medium.cloud.size(),
        }
    }
}

fn centre_gain(s: &Scenario) -> f64 {
    s.spectral.gain_coeff(s.medium.gain_density(&Vec3::zeros()))
}

/// Centre gain with `gain_kappa` set to one.
fn unit_kappa_gain(s: &Scenario) -> f64 {
    let mut spectral = s.spectral;
    spectral.gain_kappa = 1.0;
    spectral.gain_coeff(s.medium.gain_density(&Vec3::zeros()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Tolerance {
    /// Stop once the working interval is narrower than this fraction of its
    /// midpoint.
    Relative(f64),
    Absolute(f64),
}

impl Tolerance {
    fn width_at(&self, mid: f64) -> f64 {
        match *self {
            Tolerance::Relative(r) => r * mid.abs(),
            Tolerance::Absolute(a) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub value: f64,
    /// Retry index; retry `k` runs `4^k` times the base photon count.
    pub attempt: u32,
    pub verdict: Verdict,
    pub q: Option<f64>,
    pub q_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bisection {
    pub critical_value: f64,
    /// Last values known to converge and to diverge with the required
    /// confidence. Wider than the working interval when some probes stayed
    /// inconclusive.
    pub bracket: (f64, f64),
    /// Interval the bisection actually closed in on.
    pub working: (f64, f64),
    pub probes: Vec<ProbeRecord>,
}

/// Bisects between a converging `lo` and a diverging `hi`.
///
/// `probe(value, attempt)` runs one experiment. Inconclusive probes are
/// repeated with `attempt + 1` up to `max_retries` times; if they stay
/// inconclusive the step follows the sign of `q - 1` and the confident
/// bracket is left where it was. Besides the two endpoint checks this makes
/// `ceil(log2(range / tol))` probes for an absolute tolerance.
pub fn bisect_threshold<F>(
    lo: f64,
    hi: f64,
    tol: Tolerance,
    max_retries: u32,
    mut probe: F,
) -> Result<Bisection>
where
    F: FnMut(f64, u32) -> Result<StabilityReport>,
{
    if !(lo < hi) {
        return Err(Error::Bracket {
            lo,
            hi,
            detail: "lower end must be below the upper end".into(),
        });
    }
    let mut probes = Vec::new();
    let mut settle = |value: f64, probes: &mut Vec<ProbeRecord>| -> Result<StabilityReport> {
        let mut attempt = 0;
        loop {
            let report = probe(value, attempt)?;
            probes.push(ProbeRecord {
                value,
                attempt,
                verdict: report.verdict,
                q: report.q,
                q_err: report.q_err,
            });
            if report.verdict != Verdict::Inconclusive || attempt >= max_retries {
                return Ok(report);
            }
            attempt += 1;
        }
    };

    let at_lo = settle(lo, &mut probes)?;
    if at_lo.verdict != Verdict::Converging {
        return Err(Error::Bracket {
            lo,
            hi,
            detail: format!("lower end is {:?}, not converging", at_lo.verdict),
        });
    }
    let at_hi = settle(hi, &mut probes)?;
    if at_hi.verdict != Verdict::Diverging {
        return Err(Error::Bracket {
            lo,
            hi,
            detail: format!("upper end is {:?}, not diverging", at_hi.verdict),
        });
    }

    let (mut a, mut b) = (lo, hi);
    let (mut sure_lo, mut sure_hi) = (lo, hi);
    loop {
        let mid = 0.5 * (a + b);
        if b - a <= tol.width_at(mid) || mid <= a || mid >= b {
            break;
        }
        let report = settle(mid, &mut probes)?;
        let diverging = match report.verdict {
            Verdict::Diverging => {
                sure_hi = mid;
                true
            }
            Verdict::Converging => {
                sure_lo = mid;
                false
            }
            Verdict::Inconclusive => report.q.is_none_or(|q| q >= 1.0),
        };
        if diverging {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Bisection {
        critical_value: 0.5 * (a + b),
        bracket: (sure_lo, sure_hi),
        working: (a, b),
        probes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    pub tol: Tolerance,
    pub max_retries: u32,
    pub stability: StabilityOptions,
    /// Use `R + 0.71 l_tr` as the effective radius in the analytic value.
    pub extrapolation: bool,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            tol: Tolerance::Relative(0.05),
            max_retries: 2,
            stability: StabilityOptions::default(),
            extrapolation: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub scan_param: ScanParam,
    pub critical_value: f64,
    pub bracket: (f64, f64),
    /// Diffusion-theory threshold in units of the scanned parameter, when
    /// the scenario is one the formula covers.
    pub analytic_letokhov: Option<f64>,
    /// `critical_value / analytic_letokhov - 1`.
    pub relative_gap: Option<f64>,
    pub extrapolation: bool,
    pub probes: Vec<ProbeRecord>,
}

/// Bisects `param` between `bracket.0` (converging) and `bracket.1`
/// (diverging). Every probe reuses the base seed, so neighbouring probes
/// differ only through the parameter.
pub fn threshold_scan(
    base: &Scenario,
    param: ScanParam,
    bracket: (f64, f64),
    opts: &ThresholdOptions,
) -> Result<ThresholdReport> {
    let bisection = bisect_threshold(
        bracket.0,
        bracket.1,
        opts.tol,
        opts.max_retries,
        |value, attempt| {
            let mut s = param.apply(base, value)?;
            s.run.n_photons = s.run.n_photons.saturating_mul(4u64.pow(attempt));
            Ok(classify_stability(&s.simulate()?, &opts.stability))
        },
    )?;
    let analytic = analytic_letokhov(base, param, opts.extrapolation);
    Ok(ThresholdReport {
        scan_param: param,
        critical_value: bisection.critical_value,
        bracket: bisection.bracket,
        analytic_letokhov: analytic,
        relative_gap: analytic.map(|a| bisection.critical_value / a - 1.0),
        extrapolation: opts.extrapolation,
        probes: bisection.probes,
    })
}

/// Threshold predicted by the diffusive criterion `R = pi sqrt(l_tr l_g / 3)`
/// for a uniform sphere with gain and scattering overlapping everywhere and
/// no anti-Stokes loss. `None` outside that setting.
pub fn analytic_letokhov(base: &Scenario, param: ScanParam, extrapolation: bool) -> Option<f64> {
    let CloudShape::UniformSphere { radius } = base.medium.cloud.shape else {
        return None;
    };
    let delta = base.run.emission_detuning;
    if !base.medium.overlap_gain || base.spectral.beta_inel(delta) != 0.0 {
        return None;
    }
    let centre = Vec3::zeros();
    let l_sc_inv = base.medium.scatterer_density(&centre) * base.spectral.sigma_sc(delta);
    if !(l_sc_inv > 0.0) {
        return None;
    }
    // both supported phase functions are symmetric, so l_tr = l_sc
    let l_tr = 1.0 / l_sc_inv;
    let extra = if extrapolation {
        EXTRAPOLATION * l_tr
    } else {
        0.0
    };
    let critical_gain = |r: f64| {
        let r_eff = r + extra;
        PI * PI * l_tr / (3.0 * r_eff * r_eff)
    };
    match param {
        ScanParam::GainG0 => Some(critical_gain(radius)),
        ScanParam::PumpRabi => {
            let mut unit = base.clone();
            unit.spectral.rabi_2v = base.spectral.gamma;
            let g1 = centre_gain(&unit);
            (g1 > 0.0).then(|| base.spectral.gamma * (critical_gain(radius) / g1).sqrt())
        }
        ScanParam::CloudRadius => {
            let g = centre_gain(base);
            (g > 0.0).then(|| PI * (l_tr / (3.0 * g)).sqrt() - extra)
        }
    }
}
