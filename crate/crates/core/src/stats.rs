//! Summary statistics over per-trial Monte Carlo values.

use crate::{lit, to_f64, Real};

/// Mean, unbiased variance and standard error of a sample, accumulated in
/// index order so the result never depends on how the values were produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats<T> {
    pub mean: T,
    pub variance: T,
    pub stderr: T,
    pub count: usize,
}

impl<T: Real> SampleStats<T> {
    pub fn from_values(values: &[T]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { mean: T::zero(), variance: T::zero(), stderr: T::zero(), count };
        }
        let nf: T = lit(count as f64);
        let mean = values.iter().fold(T::zero(), |acc, &v| acc + v) / nf;
        let variance = if count > 1 {
            let ss = values.iter().fold(T::zero(), |acc, &v| {
                let d = v - mean;
                acc + d * d
            });
            ss / (nf - T::one())
        } else {
            T::zero()
        };
        let stderr = (variance / nf).sqrt();
        Self { mean, variance, stderr, count }
    }

    /// Standard error of the difference between two independent estimates.
    pub fn combined_stderr(&self, other: &Self) -> T {
        (self.stderr * self.stderr + other.stderr * other.stderr).sqrt()
    }
}

/// Pearson correlation of two equal-length samples.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Least-squares slope of `y` against `x`.
pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "slope needs at least two points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Slope of `log y` against `log x`; the fitted power in `y ~ x^k`.
pub fn loglog_slope<T: Real>(x: &[T], y: &[T]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|&v| to_f64(v).ln()).collect();
    let ly: Vec<f64> = y.iter().map(|&v| to_f64(v).ln()).collect();
    linear_slope(&lx, &ly)
}
