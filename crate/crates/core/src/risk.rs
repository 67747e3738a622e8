//! Risk estimates along a penalty grid and tuning by their minimiser.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::lasso::{path_on_grid, LassoProblem, SolverOptions};
use crate::projection::Projection;
use crate::seed::rng_from_seed;
use crate::smoother::DfEstimate;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    /// SURE with the jump-corrected degrees of freedom.
    Df,
    /// SURE with the selected dimension only.
    DfS,
    Cv5,
    Cv10,
    /// SURE for the lasso fit itself.
    Lasso,
}

impl RiskMethod {
    pub const ALL: [RiskMethod; 5] = [
        RiskMethod::Df,
        RiskMethod::DfS,
        RiskMethod::Cv5,
        RiskMethod::Cv10,
        RiskMethod::Lasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RiskMethod::Df => "df",
            RiskMethod::DfS => "df_s",
            RiskMethod::Cv5 => "cv5",
            RiskMethod::Cv10 => "cv10",
            RiskMethod::Lasso => "lasso",
        }
    }

    pub fn folds(self) -> Option<usize> {
        match self {
            RiskMethod::Cv5 => Some(5),
            RiskMethod::Cv10 => Some(10),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    Known,
    GcvEstimated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCurve {
    pub method: RiskMethod,
    pub lambda_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub lambda_hat: f64,
    /// Grid index of `lambda_hat`.
    pub index_hat: usize,
    pub sigma_source: SigmaSource,
    pub sigma2: f64,
}

impl RiskCurve {
    fn new(
        method: RiskMethod,
        lambdas: &[f64],
        values: Vec<f64>,
        sigma2: f64,
        sigma_source: SigmaSource,
    ) -> Result<Self> {
        let index_hat = argmin_largest_lambda(&values)?;
        Ok(RiskCurve {
            method,
            lambda_grid: lambdas.to_vec(),
            lambda_hat: lambdas[index_hat],
            index_hat,
            values,
            sigma_source,
            sigma2,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_curves_csv(std::slice::from_ref(self), out)
    }
}

/// Long-format CSV `(method, lambda, value)` for several curves.
pub fn write_curves_csv<W: Write>(curves: &[RiskCurve], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "lambda", "value"])?;
    for c in curves {
        for (l, v) in c.lambda_grid.iter().zip(&c.values) {
            w.write_record(&[c.method.name().to_string(), l.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Index of the smallest value; among equal values the first one, which on
/// a decreasing grid is the largest penalty.
pub fn argmin_largest_lambda(values: &[f64]) -> Result<usize> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty risk curve".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("risk curve contains NaN".into()));
    }
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Minimising penalty of a curve.
pub fn tune(curve: &RiskCurve) -> Result<f64> {
    Ok(curve.lambda_grid[argmin_largest_lambda(&curve.values)?])
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("sigma^2 must be positive, got {sigma2}")))
    }
}

fn check_aligned(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("{what} has {got} entries, grid has {want}")))
    }
}

fn rss(y: &DVector<f64>, fit: &DVector<f64>) -> f64 {
    (y - fit).norm_squared()
}

/// `||y - fit||^2 - n sigma^2 + 2 sigma^2 df` on the grid.
fn sure(y: &DVector<f64>, fits: &[DVector<f64>], df: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    check_sigma2(sigma2)?;
    let n = y.len() as f64;
    fits.iter()
        .zip(df)
        .map(|(f, d)| {
            if f.len() != y.len() {
                return Err(Error::Dimension(format!(
                    "fit has length {}, response has {}",
                    f.len(),
                    y.len()
                )));
            }
            Ok(rss(y, f) - n * sigma2 + 2.0 * sigma2 * d)
        })
        .collect()
}

/// Risk estimate for lasso-OLS using the jump-corrected degrees of freedom.
pub fn risk_sure_df(
    y: &DVector<f64>,
    ols_fits: &[DVector<f64>],
    df: &DfEstimate,
    sigma2: f64,
    source: SigmaSource,
) -> Result<RiskCurve> {
    let m = df.lambda_grid.len();
    check_aligned("fits", ols_fits.len(), m)?;
    check_aligned("df estimate", df.df.len(), m)?;
    let values = sure(y, ols_fits, &df.df, sigma2)?;
    RiskCurve::new(RiskMethod::Df, &df.lambda_grid, values, sigma2, source)
}

/// Risk estimate for lasso-OLS that counts only the selected dimension.
pub fn risk_sure_dfs(
    y: &DVector<f64>,
    ols_fits: &[DVector<f64>],
    lambdas: &[f64],
    dims: &[usize],
    sigma2: f64,
    source: SigmaSource,
) -> Result<RiskCurve> {
    check_aligned("fits", ols_fits.len(), lambdas.len())?;
    check_aligned("dims", dims.len(), lambdas.len())?;
    let df: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
    let values = sure(y, ols_fits, &df, sigma2)?;
    RiskCurve::new(RiskMethod::DfS, lambdas, values, sigma2, source)
}

/// Risk estimate for the lasso fit, whose divergence is the selected
/// dimension.
pub fn risk_sure_lasso(
    y: &DVector<f64>,
    lasso_fits: &[DVector<f64>],
    lambdas: &[f64],
    dims: &[usize],
    sigma2: f64,
    source: SigmaSource,
) -> Result<RiskCurve> {
    check_aligned("fits", lasso_fits.len(), lambdas.len())?;
    check_aligned("dims", dims.len(), lambdas.len())?;
    let df: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
    let values = sure(y, lasso_fits, &df, sigma2)?;
    RiskCurve::new(RiskMethod::Lasso, lambdas, values, sigma2, source)
}

/// Random size-balanced fold labels for `n` observations.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let mut fold = vec![0; n];
    // Fold f takes positions [f n / k, (f + 1) n / k) of the permutation.
    for f in 0..k {
        for &i in &perm[f * n / k..(f + 1) * n / k] {
            fold[i] = f;
        }
    }
    fold
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

/// K-fold cross-validated prediction error of lasso-OLS, minus `n sigma^2`.
///
/// Each training fold gets its own lasso path. Its penalties are the grid
/// values scaled by `n_train / n`, which keeps the per-observation penalty
/// of the full-data fit.
pub fn risk_cv(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    k: usize,
    lambdas: &[f64],
    sigma2: f64,
    source: SigmaSource,
    seed: u64,
) -> Result<RiskCurve> {
    risk_cv_with(x, y, k, lambdas, sigma2, source, seed, SolverOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn risk_cv_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    k: usize,
    lambdas: &[f64],
    sigma2: f64,
    source: SigmaSource,
    seed: u64,
    opts: SolverOptions,
) -> Result<RiskCurve> {
    let method = match k {
        5 => RiskMethod::Cv5,
        10 => RiskMethod::Cv10,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "cross-validation supports 5 or 10 folds, got {k}"
            )))
        }
    };
    check_sigma2(sigma2)?;
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::Dimension(format!("X has {n} rows, y has {}", y.len())));
    }
    if n < k {
        return Err(Error::InvalidParameter(format!("{k} folds need at least {k} rows, got {n}")));
    }
    let fold = assign_folds(n, k, seed);
    let mut err = vec![0.0; lambdas.len()];
    for f in 0..k {
        let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
        let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
        let x_tr = select_rows(x, &train);
        let y_tr = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
        let x_te = select_rows(x, &test);
        let y_te = DVector::from_iterator(test.len(), test.iter().map(|&i| y[i]));
        let scale = train.len() as f64 / n as f64;
        let grid: Vec<f64> = lambdas.iter().map(|l| l * scale).collect();
        let mut problem = LassoProblem::new(&x_tr, &y_tr, opts)?;
        let path = path_on_grid(&mut problem, &x_tr, &y_tr, &grid)?;
        // Grid points sharing a factorization share their prediction error.
        let mut cache: HashMap<*const Projection, f64> = HashMap::new();
        for (g, proj) in path.projections.iter().enumerate() {
            let key = Arc::as_ptr(proj);
            let e = match cache.get(&key) {
                Some(e) => *e,
                None => {
                    let mut pred = DVector::zeros(test.len());
                    for (j, b) in proj.coefficients(y_tr.as_slice()) {
                        pred.axpy(b, &x_te.column(j), 1.0);
                    }
                    let e = (&y_te - pred).norm_squared();
                    cache.insert(key, e);
                    e
                }
            };
            err[g] += e;
        }
    }
    let values = err.iter().map(|e| e - n as f64 * sigma2).collect();
    RiskCurve::new(method, lambdas, values, sigma2, source)
}

/// Noise variance from the lasso fit minimising generalized
/// cross-validation, `||y - fit||^2 / (1 - dim/n)^2`, over grid points with
/// `dim < n`. Returns `(sigma2_hat, lambda_gcv)`.
pub fn estimate_sigma2_gcv(
    y: &DVector<f64>,
    lasso_fits: &[DVector<f64>],
    lambdas: &[f64],
    dims: &[usize],
) -> Result<(f64, f64)> {
    check_aligned("fits", lasso_fits.len(), lambdas.len())?;
    check_aligned("dims", dims.len(), lambdas.len())?;
    let n = y.len();
    let mut best: Option<(usize, f64)> = None;
    for (k, (fit, &d)) in lasso_fits.iter().zip(dims).enumerate() {
        if d >= n {
            continue;
        }
        let gcv = rss(y, fit) / (1.0 - d as f64 / n as f64).powi(2);
        if best.is_none_or(|(_, b)| gcv < b) {
            best = Some((k, gcv));
        }
    }
    let (k, _) = best.ok_or(Error::SaturatedPath)?;
    let sigma2 = rss(y, &lasso_fits[k]) / (n - dims[k]) as f64;
    Ok((sigma2, lambdas[k]))
}
