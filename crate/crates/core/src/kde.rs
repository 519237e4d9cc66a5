//! One-dimensional Gaussian kernel density estimate for plot output.

use serde::Serialize;

/// Evaluation grid extends this many bandwidths beyond the sample range.
const GRID_PAD: f64 = 4.0;
const MIN_GRID: usize = 512;
const MAX_GRID: usize = 20_000;
/// Grid points per bandwidth when the range is wide.
const POINTS_PER_BANDWIDTH: f64 = 10.0;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb, `0.9 · min(σ, IQR/1.34) · n^(-1/5)`.
///
/// Falls back to σ when the IQR is zero, and to `1e-3 · max(1, |mean|)`
/// when the sample has no spread at all.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 1.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1e-3 * mean.abs().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPoint {
    pub x: f64,
    pub density: f64,
}

#[derive(Debug, Clone)]
pub struct GaussianKde {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl GaussianKde {
    /// `None` for an empty sample.
    pub fn new(samples: Vec<f64>) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let bandwidth = silverman_bandwidth(&samples);
        Some(GaussianKde { samples, bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / (self.samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        self.samples
            .iter()
            .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
            .sum::<f64>()
            * norm
    }

    /// Density on an even grid covering the samples plus four bandwidths
    /// either side, fine enough for trapezoid integration.
    pub fn curve(&self) -> Vec<DensityPoint> {
        let (min, max) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let lo = min - GRID_PAD * self.bandwidth;
        let hi = max + GRID_PAD * self.bandwidth;
        let wanted = ((hi - lo) / self.bandwidth * POINTS_PER_BANDWIDTH).ceil() as usize;
        let n = wanted.clamp(MIN_GRID, MAX_GRID);
        let step = (hi - lo) / (n - 1) as f64;
        (0..n)
            .map(|i| {
                let x = lo + step * i as f64;
                DensityPoint {
                    x,
                    density: self.density(x),
                }
            })
            .collect()
    }
}

pub fn trapezoid(points: &[DensityPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[0].density + w[1].density) * (w[1].x - w[0].x))
        .sum()
}
