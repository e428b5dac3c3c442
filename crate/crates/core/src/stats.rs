//! Monte Carlo summaries with order-fixed compensated summation.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut k = KahanSum::default();
    for x in xs {
        k.add(x);
    }
    k.total()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub replications: usize,
    pub seed: u64,
    pub truncation_budget: f64,
}

impl MCResult {
    /// Sample mean and its standard error, summed in slice order.
    pub fn from_samples(samples: &[f64], seed: u64, truncation_budget: f64) -> MCResult {
        let n = samples.len();
        let mean = if n == 0 { f64::NAN } else { compensated_sum(samples.iter().copied()) / n as f64 };
        let se = if n < 2 {
            f64::NAN
        } else {
            let ss = compensated_sum(samples.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n as f64 - 1.0) / n as f64).sqrt()
        };
        MCResult { estimate: mean, std_error: se, replications: n, seed, truncation_budget }
    }

    /// |estimate - target| <= k SE + truncation budget + extra.
    pub fn within(&self, target: f64, k: f64, extra: f64) -> bool {
        (self.estimate - target).abs() <= k * self.std_error + self.truncation_budget + extra
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub n: usize,
}

pub fn sample_moments(xs: &[f64]) -> SampleMoments {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let m2 = compensated_sum(xs.iter().map(|x| (x - mean).powi(2))) / n;
    let m3 = compensated_sum(xs.iter().map(|x| (x - mean).powi(3))) / n;
    let m4 = compensated_sum(xs.iter().map(|x| (x - mean).powi(4))) / n;
    SampleMoments {
        mean,
        variance: m2 * n / (n - 1.0),
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        n: xs.len(),
    }
}

/// Weighted least squares fit of y = a + b x, returning (b, se(b)).
pub fn weighted_slope(x: &[f64], y: &[f64], sd: &[f64]) -> (f64, f64) {
    let w: Vec<f64> = sd.iter().map(|s| 1.0 / (s * s).max(1e-300)).collect();
    let sw = compensated_sum(w.iter().copied());
    let mx = compensated_sum(w.iter().zip(x).map(|(w, x)| w * x)) / sw;
    let my = compensated_sum(w.iter().zip(y).map(|(w, y)| w * y)) / sw;
    let sxx = compensated_sum(w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)));
    let sxy = compensated_sum(w.iter().zip(x).zip(y).map(|((w, x), y)| w * (x - mx) * (y - my)));
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// Ordinary least squares slope.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let ones = vec![1.0; x.len()];
    weighted_slope(x, y, &ones).0
}
