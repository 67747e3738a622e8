//! Small numeric helpers: Gaussian density/CDF and Monte Carlo summaries.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
}

impl McEstimate {
    /// Summarises a sample. Summation is pairwise so the result does not
    /// depend on how the sample was produced, only on its order.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return McEstimate { mean: f64::NAN, se: f64::NAN };
        }
        let mean = pairwise_sum(xs) / n as f64;
        if n < 2 {
            return McEstimate { mean, se: f64::NAN };
        }
        let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        McEstimate {
            mean,
            se: (var / n as f64).sqrt(),
        }
    }

    /// Standard error of the difference of two independent estimates.
    pub fn combined_se(&self, other: &McEstimate) -> f64 {
        (self.se * self.se + other.se * other.se).sqrt()
    }
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Per-column Monte Carlo summaries of a replications × grid table.
pub fn column_estimates(rows: &[Vec<f64>]) -> Vec<McEstimate> {
    let width = rows.first().map_or(0, |r| r.len());
    (0..width)
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            McEstimate::from_samples(&col)
        })
        .collect()
}

/// Trapezoid rule for samples `ys` at abscissae `xs` (any monotone order).
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]).abs() * (y[0] + y[1]))
        .sum()
}
