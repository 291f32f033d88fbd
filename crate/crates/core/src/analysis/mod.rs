//! From tallies to physics: tail ratios and stability verdicts, threshold
//! bisection, spectral scans and the mean scattering order.

mod spectrum;
mod stability;
mod threshold;

pub use spectrum::{bump_amplitudes, spectral_scan, Observation, SpectralScanTable, SpectrumRow};
pub use stability::{
    classify_stability, tail_ratio, OrderSeries, SeriesSource, StabilityOptions, StabilityReport,
    Verdict,
};
pub use threshold::{
    analytic_letokhov, bisect_threshold, threshold_scan, Bisection, ProbeRecord, ScanParam,
    ThresholdOptions, ThresholdReport, Tolerance,
};

use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::spectral::SpectralModel;
use crate::transport::{self, RunConfig, Tally};

/// Everything one Monte-Carlo run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub medium: Medium,
    pub spectral: SpectralModel,
    pub run: RunConfig,
}

impl Scenario {
    pub fn simulate(&self) -> Result<Tally> {
        transport::run(&self.medium, &self.spectral, &self.run)
    }
}

/// Weight-averaged scattering order of the escaped elastic light.
pub fn mean_scattering_order(tally: &Tally) -> Result<f64> {
    let by_order = &tally.elastic.by_order;
    let total: f64 = by_order.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Insufficient("no elastic weight escaped".into()));
    }
    let moment: f64 = by_order.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    Ok(moment / total)
}
