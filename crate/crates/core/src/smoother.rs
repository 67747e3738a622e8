//! Jump-intensity smoothing of the selected dimension along a penalty grid.
//!
//! The dimension process `lambda -> dim(S^lambda)` is replaced by its
//! monotone envelope `lambda -> inf_{lambda' < lambda} dim(S^lambda')`. The
//! jumps of the envelope, placed at `delta = log lambda`, are smoothed by an
//! adaptive Gaussian kernel and rescaled by their total count. The result
//! estimates `-lambda d/dlambda E dim(S^lambda)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::lasso::LassoPath;
use crate::stats::normal_pdf;
use crate::{Error, Result};

/// Jumps of the monotone dimension envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    /// Jump locations on the log-penalty scale.
    pub deltas: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub total: usize,
}

impl JumpRecord {
    pub fn empty() -> Self {
        JumpRecord {
            deltas: Vec::new(),
            multiplicities: Vec::new(),
            total: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

/// Extracts the jumps of the envelope from dimensions observed on a strictly
/// decreasing grid.
///
/// The envelope at grid point `k` is `min_{j >= k} dims[j]`, the smallest
/// dimension seen at this or any smaller penalty. Increases of the envelope
/// between neighbouring grid points are jumps; a jump is placed at the
/// midpoint of the two log-penalties, since it happened somewhere between
/// them. Dimensions that later fall back down are ignored.
pub fn extract_jumps(lambdas: &[f64], dims: &[usize]) -> JumpRecord {
    assert_eq!(lambdas.len(), dims.len(), "grid and dimensions differ in length");
    let m = dims.len();
    if m < 2 {
        return JumpRecord::empty();
    }
    let mut envelope = dims.to_vec();
    for k in (0..m - 1).rev() {
        envelope[k] = envelope[k].min(envelope[k + 1]);
    }
    let mut rec = JumpRecord::empty();
    for k in 1..m {
        if envelope[k] > envelope[k - 1] {
            let size = envelope[k] - envelope[k - 1];
            rec.deltas.push(0.5 * (lambdas[k].ln() + lambdas[k - 1].ln()));
            rec.multiplicities.push(size);
            rec.total += size;
        }
    }
    rec
}

pub fn extract_path_jumps(path: &LassoPath) -> JumpRecord {
    extract_jumps(&path.lambdas, &path.dims)
}

/// Tuning of the adaptive kernel smoother.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KdeConfig {
    /// Exponent of the local bandwidth factor `(g / f_pilot)^alpha`.
    pub sensitivity: f64,
    /// Multiplier on Silverman's rule for the pilot bandwidth.
    pub pilot_scale: f64,
    /// Multiplier applied to the local bandwidths of the final estimate.
    pub bandwidth_scale: f64,
    /// Floor bandwidth as a fraction of the evaluation range, divided by
    /// `sqrt(total)`, used when the jumps have no spread.
    pub floor_fraction: f64,
    pub min_spread: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            sensitivity: 0.5,
            pilot_scale: 1.0,
            bandwidth_scale: 1.0,
            floor_fraction: 0.1,
            min_spread: 1e-8,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sensitivity >= 0.0
            && self.sensitivity <= 1.0
            && self.pilot_scale > 0.0
            && self.bandwidth_scale > 0.0
            && self.floor_fraction > 0.0
            && self.min_spread >= 0.0
            && [
                self.sensitivity,
                self.pilot_scale,
                self.bandwidth_scale,
                self.floor_fraction,
                self.min_spread,
            ]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid smoother settings {self:?}")))
        }
    }
}

/// Weighted mean and standard deviation.
fn weighted_moments(xs: &[f64], ws: &[usize]) -> (f64, f64) {
    let total: f64 = ws.iter().map(|&w| w as f64).sum();
    let mean = xs.iter().zip(ws).map(|(x, &w)| x * w as f64).sum::<f64>() / total;
    let var = xs
        .iter()
        .zip(ws)
        .map(|(x, &w)| w as f64 * (x - mean).powi(2))
        .sum::<f64>()
        / (total - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Quantile of the sample in which each `xs[i]` is repeated `ws[i]` times,
/// with linear interpolation between order statistics.
fn weighted_quantile(xs: &[f64], ws: &[usize], q: f64) -> f64 {
    let mut pairs: Vec<(f64, usize)> = xs.iter().copied().zip(ws.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: usize = ws.iter().sum();
    let pos = q * (total - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    let nth = |i: usize| {
        let mut seen = 0;
        for &(x, w) in &pairs {
            seen += w;
            if i < seen {
                return x;
            }
        }
        pairs.last().expect("nonempty sample").0
    };
    let a = nth(lo);
    if frac == 0.0 {
        a
    } else {
        a + frac * (nth(lo + 1) - a)
    }
}

/// Per-jump bandwidths of the adaptive smoother.
pub fn bandwidths(record: &JumpRecord, eval_range: f64, cfg: &KdeConfig) -> Vec<f64> {
    let xs = &record.deltas;
    let ws = &record.multiplicities;
    let total = record.total as f64;
    let (_, sd) = weighted_moments(xs, ws);
    if sd < cfg.min_spread {
        let range = if eval_range > 0.0 { eval_range } else { 1.0 };
        return vec![cfg.floor_fraction * range / total.sqrt(); xs.len()];
    }
    let iqr = weighted_quantile(xs, ws, 0.75) - weighted_quantile(xs, ws, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h0 = cfg.pilot_scale * 0.9 * spread * total.powf(-0.2);
    let h = cfg.bandwidth_scale * h0;
    if cfg.sensitivity == 0.0 {
        return vec![h; xs.len()];
    }
    let pilot: Vec<f64> = xs
        .iter()
        .map(|&x| {
            xs.iter()
                .zip(ws)
                .map(|(&c, &w)| w as f64 * normal_pdf((x - c) / h0))
                .sum::<f64>()
                / (h0 * total)
        })
        .collect();
    let log_g = pilot
        .iter()
        .zip(ws)
        .map(|(f, &w)| w as f64 * f.ln())
        .sum::<f64>()
        / total;
    let g = log_g.exp();
    pilot.iter().map(|f| h * (g / f).powf(cfg.sensitivity)).collect()
}

/// Smoothed jump intensity on `eval_deltas`, scaled so that it integrates to
/// the total number of jumps.
pub fn smooth_jumps(record: &JumpRecord, eval_deltas: &[f64], cfg: &KdeConfig) -> Vec<f64> {
    if record.is_empty() {
        return vec![0.0; eval_deltas.len()];
    }
    let (lo, hi) = eval_deltas
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &d| (a.min(d), b.max(d)));
    let range = if hi > lo { hi - lo } else { 0.0 };
    let hs = bandwidths(record, range, cfg);
    eval_deltas
        .iter()
        .map(|&x| {
            record
                .deltas
                .iter()
                .zip(&record.multiplicities)
                .zip(&hs)
                .map(|((&c, &w), &h)| w as f64 * normal_pdf((x - c) / h) / h)
                .sum()
        })
        .collect()
}

/// Which selection procedure the jumps came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DfMethod {
    LassoOls,
    BestSubset,
}

impl DfMethod {
    pub fn multiplier(self) -> f64 {
        match self {
            DfMethod::LassoOls => 1.0,
            DfMethod::BestSubset => 2.0,
        }
    }
}

/// Degrees of freedom estimate along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DfEstimate {
    pub lambda_grid: Vec<f64>,
    pub df_s: Vec<f64>,
    /// Smoothed jump intensity, before the method multiplier.
    pub correction: Vec<f64>,
    pub df: Vec<f64>,
    pub method: DfMethod,
}

impl DfEstimate {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "df_s", "correction", "df"])?;
        for k in 0..self.lambda_grid.len() {
            w.write_record(&[
                self.lambda_grid[k].to_string(),
                self.df_s[k].to_string(),
                self.correction[k].to_string(),
                self.df[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `dim + c * correction` on the grid, with `c = 1` for lasso-OLS and
/// `c = 2` for best subset.
pub fn estimate_df_from_dims(
    lambdas: &[f64],
    dims: &[usize],
    method: DfMethod,
    cfg: &KdeConfig,
) -> DfEstimate {
    let record = extract_jumps(lambdas, dims);
    let deltas: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let correction = smooth_jumps(&record, &deltas, cfg);
    let c = method.multiplier();
    let df_s: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
    let df = df_s.iter().zip(&correction).map(|(d, h)| d + c * h).collect();
    DfEstimate {
        lambda_grid: lambdas.to_vec(),
        df_s,
        correction,
        df,
        method,
    }
}

pub fn estimate_df(path: &LassoPath, method: DfMethod, cfg: &KdeConfig) -> DfEstimate {
    estimate_df_from_dims(&path.lambdas, &path.dims, method, cfg)
}
