//! Geometric tail of the order expansion and the stability verdict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transport::{ChannelTally, Tally};

/// Intensity per scattering order with the tail window to fit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSeries {
    pub intensities: Vec<f64>,
    pub n_photons: u64,
    /// Inclusive `(n_lo, n_hi)`.
    pub window: (usize, usize),
}

/// Which tally series the verdict is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesSource {
    /// All escaped elastic-channel weight.
    Elastic,
    /// Elastic weight escaping into the detector cone about +z.
    Detector,
}

impl OrderSeries {
    pub fn new(intensities: Vec<f64>, n_photons: u64, window: (usize, usize)) -> Result<Self> {
        let (lo, hi) = window;
        if hi >= intensities.len() || hi < lo + 4 {
            return Err(Error::Insufficient(format!(
                "tail window {window:?} must span at least five orders below {}",
                intensities.len()
            )));
        }
        Ok(OrderSeries {
            intensities,
            n_photons,
            window,
        })
    }

    /// Series from a tally with the default window: the upper half of the
    /// orders holding at least `min_count` escapes.
    pub fn from_tally(tally: &Tally, source: SeriesSource, min_count: u64) -> Result<Self> {
        let ChannelTally {
            by_order,
            counts,
            detector,
            detector_counts,
            ..
        } = &tally.elastic;
        let (intensities, counts) = match source {
            SeriesSource::Elastic => (by_order, counts),
            SeriesSource::Detector => (detector, detector_counts),
        };
        let top = counts
            .iter()
            .rposition(|&c| c >= min_count)
            .ok_or_else(|| Error::Insufficient(format!("no order holds {min_count} escapes")))?;
        let half = top.div_ceil(2);
        let rise = end_of_rise(&intensities[..=top], &counts[..=top]);
        let lo = if rise + 4 <= top {
            half.max(rise)
        } else {
            half
        };
        OrderSeries::new(intensities.clone(), tally.photons_launched, (lo, top))
    }
}

/// End of the build-up from the source: the first order whose intensity is
/// within three counting errors of the series maximum. Returns 0 unless the
/// series ends significantly below its maximum, since a series that is flat
/// or still growing at the top has no separate build-up to skip.
fn end_of_rise(intensities: &[f64], counts: &[u64]) -> usize {
    let peak = intensities.iter().copied().fold(0.0, f64::max);
    let near_peak = |(&w, &c): (&f64, &u64)| c > 0 && w * (1.0 + 3.0 / (c as f64).sqrt()) >= peak;
    match intensities.iter().zip(counts).next_back() {
        Some(last) if !near_peak(last) => intensities
            .iter()
            .zip(counts)
            .position(near_peak)
            .unwrap_or(0),
        _ => 0,
    }
}

/// Least-squares slope of `ln I_n` over the window, exponentiated. Returns
/// `(q, q_err)` where `q_err` propagates the standard error of the slope.
pub fn tail_ratio(series: &OrderSeries) -> Result<(f64, f64)> {
    let (lo, hi) = series.window;
    let window = &series.intensities[lo..=hi];
    if let Some(n) = window.iter().position(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::Insufficient(format!(
            "order {} has no escaped weight inside the tail window",
            lo + n
        )));
    }
    let m = window.len() as f64;
    let mean_n = (lo + hi) as f64 / 2.0;
    let logs: Vec<f64> = window.iter().map(|w| w.ln()).collect();
    let mean_y = logs.iter().sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, y) in logs.iter().enumerate() {
        let dx = (lo + i) as f64 - mean_n;
        sxx += dx * dx;
        sxy += dx * (y - mean_y);
    }
    let slope = sxy / sxx;
    let rss: f64 = logs
        .iter()
        .enumerate()
        .map(|(i, y)| {
            let r = y - mean_y - slope * ((lo + i) as f64 - mean_n);
            r * r
        })
        .sum();
    let slope_err = (rss / (m - 2.0) / sxx).sqrt();
    let q = slope.exp();
    Ok((q, q * slope_err))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converging,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    pub source: SeriesSource,
    /// Escapes an order needs to enter the tail window.
    pub min_count: u64,
    /// `q` must clear 1 by this many standard errors.
    pub margin_sigmas: f64,
    /// Truncated weight fraction above which the run is called diverging.
    pub max_truncated_fraction: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            source: SeriesSource::Elastic,
            min_count: 100,
            margin_sigmas: 2.0,
            max_truncated_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Fitted ratio between successive orders; absent without enough
    /// statistics.
    pub q: Option<f64>,
    pub q_err: Option<f64>,
    pub verdict: Verdict,
    pub truncated_fraction: f64,
    pub window: Option<(usize, usize)>,
    /// Tail ratio of the detector-cone series, when it has the statistics.
    pub detector_q: Option<(f64, f64)>,
    /// The weight overflow cap was hit.
    pub overflow: bool,
}

pub fn classify_stability(tally: &Tally, opts: &StabilityOptions) -> StabilityReport {
    let fit = OrderSeries::from_tally(tally, opts.source, opts.min_count)
        .and_then(|s| tail_ratio(&s).map(|qe| (qe, s.window)));
    let detector_q = OrderSeries::from_tally(tally, SeriesSource::Detector, opts.min_count)
        .and_then(|s| tail_ratio(&s))
        .ok();
    let truncated_fraction = tally.truncated_fraction();
    let forced = tally.diverged || truncated_fraction > opts.max_truncated_fraction;
    let (q, q_err, window) = match fit {
        Ok(((q, e), w)) => (Some(q), Some(e), Some(w)),
        Err(_) => (None, None, None),
    };
    let verdict = match (forced, q, q_err) {
        (true, _, _) => Verdict::Diverging,
        (false, Some(q), Some(e)) if q - opts.margin_sigmas * e > 1.0 => Verdict::Diverging,
        (false, Some(q), Some(e)) if q + opts.margin_sigmas * e < 1.0 => Verdict::Converging,
        _ => Verdict::Inconclusive,
    };
    StabilityReport {
        q,
        q_err,
        verdict,
        truncated_fraction,
        window,
        detector_q,
        overflow: tally.diverged,
    }
}
