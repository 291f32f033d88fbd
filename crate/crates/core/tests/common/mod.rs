//! Reference implementations shared by the integration tests. Nothing here
//! calls into the transport engine.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Analogue random walk: a photon starts at the centre of a uniform sphere
/// of radius `radius` (unit mean free path), takes exponential steps in
/// isotropic directions and is counted until it leaves. Returns the number
/// of scatterings of each history.
pub fn walker_orders(radius: f64, histories: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..histories)
        .map(|_| {
            let (mut x, mut y, mut z) = (0.0f64, 0.0f64, 0.0f64);
            let mut n = 0;
            loop {
                let cos_t: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let sin_t = (1.0 - cos_t * cos_t).sqrt();
                let step = -rng.random::<f64>().ln();
                x += step * sin_t * phi.cos();
                y += step * sin_t * phi.sin();
                z += step * cos_t;
                if x * x + y * y + z * z >= radius * radius {
                    break n;
                }
                n += 1;
            }
        })
        .collect()
}

pub fn mean_and_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Kolmogorov-Smirnov distance of a sample from a continuous CDF.
pub fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in sample.iter().enumerate() {
        let f = cdf(*x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    d
}

/// Asymptotic p-value of the KS statistic, with Stephens' small-sample
/// correction.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let t = d * (sqrt_n + 0.12 + 0.11 / sqrt_n);
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..200 {
        let j = j as f64;
        sum += sign * (-2.0 * j * j * t * t).exp();
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
