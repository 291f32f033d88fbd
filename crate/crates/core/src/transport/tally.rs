//! Mergeable accumulators for escaped weight.

use serde::Serialize;

use super::photon::{Photon, SpectralChannel};

/// Polar bins of 10 degrees, measured from the x polarization axis.
pub const ANGLE_BINS: usize = 18;

/// Lower edges of the order buckets used by the angular histogram; the last
/// bucket is open-ended.
pub const ORDER_BUCKET_EDGES: [u32; 9] = [0, 1, 2, 5, 10, 20, 50, 100, 200];

pub fn angle_bin(cos_from_x: f64) -> usize {
    let theta = cos_from_x.clamp(-1.0, 1.0).acos();
    ((theta / std::f64::consts::PI * ANGLE_BINS as f64) as usize).min(ANGLE_BINS - 1)
}

pub fn order_bucket(order: u32) -> usize {
    ORDER_BUCKET_EDGES.partition_point(|&edge| edge <= order) - 1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ChannelTally {
    /// Escaped weight per scattering order.
    pub by_order: Vec<f64>,
    /// Number of escapes per scattering order.
    pub counts: Vec<u64>,
    /// Escaped weight per order inside the detector cone about +z.
    pub detector: Vec<f64>,
    pub detector_counts: Vec<u64>,
    /// Escaped weight per polar bin.
    pub angular: Vec<f64>,
}

impl ChannelTally {
    // folds from +0.0: `Iterator::sum` of an empty float slice is -0.0,
    // which would leak into the output tables
    pub fn total(&self) -> f64 {
        self.by_order.iter().fold(0.0, |a, w| a + w)
    }

    pub fn detector_total(&self) -> f64 {
        self.detector.iter().fold(0.0, |a, w| a + w)
    }

    pub fn merge(&mut self, other: &ChannelTally) {
        add_into(&mut self.by_order, &other.by_order);
        add_into(&mut self.counts, &other.counts);
        add_into(&mut self.detector, &other.detector);
        add_into(&mut self.detector_counts, &other.detector_counts);
        add_into(&mut self.angular, &other.angular);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tally {
    pub elastic: ChannelTally,
    pub anti_stokes: ChannelTally,
    /// `[polar bin][order bucket]`, both channels combined.
    pub angular_orders: Vec<Vec<f64>>,
    /// Weight arriving at collisions, indexed by the order before the
    /// collision.
    pub collisions: Vec<f64>,
    /// Weight of histories cut at the order limit.
    pub truncated_weight: f64,
    pub truncated_count: u64,
    pub photons_launched: u64,
    /// Some history hit the weight overflow cap.
    pub diverged: bool,
}

impl Tally {
    pub fn channel(&self, channel: SpectralChannel) -> &ChannelTally {
        match channel {
            SpectralChannel::RamanElastic => &self.elastic,
            SpectralChannel::AntiStokes => &self.anti_stokes,
        }
    }

    pub fn total_escaped(&self) -> f64 {
        self.elastic.total() + self.anti_stokes.total()
    }

    /// Fraction of the tallied weight that was cut at the order limit.
    pub fn truncated_fraction(&self) -> f64 {
        let all = self.total_escaped() + self.truncated_weight;
        if all > 0.0 {
            self.truncated_weight / all
        } else {
            0.0
        }
    }

    pub fn record_escape(&mut self, photon: &Photon, cos_detector: f64) {
        let order = photon.order as usize;
        let w = photon.weight;
        let bin = angle_bin(photon.dir.x);
        let ch = match photon.channel {
            SpectralChannel::RamanElastic => &mut self.elastic,
            SpectralChannel::AntiStokes => &mut self.anti_stokes,
        };
        add_at(&mut ch.by_order, order, w);
        add_at(&mut ch.counts, order, 1);
        add_at(&mut ch.angular, bin, w);
        if photon.dir.z >= cos_detector {
            add_at(&mut ch.detector, order, w);
            add_at(&mut ch.detector_counts, order, 1);
        }
        if self.angular_orders.len() <= bin {
            self.angular_orders.resize(bin + 1, Vec::new());
        }
        add_at(&mut self.angular_orders[bin], order_bucket(photon.order), w);
    }

    pub fn record_collision(&mut self, photon: &Photon) {
        add_at(&mut self.collisions, photon.order as usize, photon.weight);
    }

    pub fn record_truncation(&mut self, photon: &Photon) {
        self.truncated_weight += photon.weight;
        self.truncated_count += 1;
    }

    /// Entrywise sum. The empty tally is the identity.
    pub fn merge(&mut self, other: &Tally) {
        self.elastic.merge(&other.elastic);
        self.anti_stokes.merge(&other.anti_stokes);
        if self.angular_orders.len() < other.angular_orders.len() {
            self.angular_orders
                .resize(other.angular_orders.len(), Vec::new());
        }
        for (mine, theirs) in self.angular_orders.iter_mut().zip(&other.angular_orders) {
            add_into(mine, theirs);
        }
        add_into(&mut self.collisions, &other.collisions);
        self.truncated_weight += other.truncated_weight;
        self.truncated_count += other.truncated_count;
        self.photons_launched += other.photons_launched;
        self.diverged |= other.diverged;
    }
}

fn add_at<T: Copy + Default + std::ops::AddAssign>(v: &mut Vec<T>, i: usize, x: T) {
    if v.len() <= i {
        v.resize(i + 1, T::default());
    }
    v[i] += x;
}

fn add_into<T: Copy + Default + std::ops::AddAssign>(v: &mut Vec<T>, other: &[T]) {
    if v.len() < other.len() {
        v.resize(other.len(), T::default());
    }
    for (a, &b) in v.iter_mut().zip(other) {
        *a += b;
    }
}
