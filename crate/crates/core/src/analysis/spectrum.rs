//! Emission spectra versus control-mode detuning.

use serde::Serialize;

use super::stability::{classify_stability, StabilityOptions, Verdict};
use super::Scenario;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::transport::{ChannelTally, ANGLE_BINS};

/// Which escaping light counts towards a spectrum point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    AllAngles,
    /// The 10-degree polar bin about the x axis holding `theta_deg`, plus its
    /// mirror bin at `180 - theta_deg`.
    PolarBin {
        theta_deg: f64,
    },
}

impl Observation {
    fn collect(&self, ch: &ChannelTally) -> f64 {
        match *self {
            Observation::AllAngles => ch.total(),
            Observation::PolarBin { theta_deg } => {
                let bin = ((theta_deg / 180.0 * ANGLE_BINS as f64) as usize).min(ANGLE_BINS - 1);
                let mirror = ANGLE_BINS - 1 - bin;
                let at = |i: usize| ch.angular.get(i).copied().unwrap_or(0.0);
                if mirror == bin {
                    at(bin)
                } else {
                    at(bin) + at(mirror)
                }
            }
        }
    }
}

/// One grid point. Intensities are per launched photon and absent where the
/// run diverged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub delta_c: f64,
    pub b0: f64,
    pub elastic: Option<f64>,
    pub anti_stokes: Option<f64>,
    pub sum: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralScanTable {
    pub observation: Observation,
    /// Ordered by `b0`, then by `delta_c`.
    pub rows: Vec<SpectrumRow>,
}

/// Runs the scenario at every `(b0, delta_c)` pair. All points with the same
/// `b0` share one seed derived from the base seed and the `b0` index, so the
/// shape of each curve is free of point-to-point noise.
pub fn spectral_scan(
    base: &Scenario,
    b0_values: &[f64],
    delta_c_grid: &[f64],
    observation: Observation,
    stability: &StabilityOptions,
) -> Result<SpectralScanTable> {
    if delta_c_grid.is_empty() || b0_values.is_empty() {
        return Err(Error::config("scan.delta_c", "grid must not be empty"));
    }
    let mut rows = Vec::with_capacity(b0_values.len() * delta_c_grid.len());
    for (i, &b0) in b0_values.iter().enumerate() {
        let mut s = base.clone();
        s.medium = base.medium.with_b0(b0, &base.spectral)?;
        s.run.seed = derive_seed(base.run.seed, i as u64);
        for &delta_c in delta_c_grid {
            s.spectral.delta_c = delta_c;
            let tally = s.simulate()?;
            let diverged = classify_stability(&tally, stability).verdict == Verdict::Diverging;
            let norm = tally.photons_launched as f64;
            let (elastic, anti_stokes) = if diverged {
                (None, None)
            } else {
                (
                    Some(observation.collect(&tally.elastic) / norm),
                    Some(observation.collect(&tally.anti_stokes) / norm),
                )
            };
            rows.push(SpectrumRow {
                delta_c,
                b0,
                elastic,
                anti_stokes,
                sum: elastic.zip(anti_stokes).map(|(e, a)| e + a),
                diverged,
            });
        }
    }
    Ok(SpectralScanTable { observation, rows })
}

/// Per `b0`: the largest sum minus the mean of the sums at the two ends of
/// the detuning grid. `None` for curves with a diverged point.
pub fn bump_amplitudes(table: &SpectralScanTable) -> Vec<(f64, Option<f64>)> {
    let mut out: Vec<(f64, Option<f64>)> = Vec::new();
    let mut start = 0;
    while start < table.rows.len() {
        let b0 = table.rows[start].b0;
        let end = start
            + table.rows[start..]
                .iter()
                .take_while(|r| r.b0 == b0)
                .count();
        let sums: Option<Vec<f64>> = table.rows[start..end].iter().map(|r| r.sum).collect();
        let bump = sums.map(|s| {
            let peak = s.iter().copied().fold(f64::MIN, f64::max);
            peak - 0.5 * (s[0] + s[s.len() - 1])
        });
        out.push((b0, bump));
        start = end;
    }
    out
}
