//! Monte Carlo studies: replication loops, loss accounting, risk-estimate
//! MSE tables and covariance checks of the degrees of freedom estimate.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::{
    build_beta, build_design_with_source, draw_noise, load_csv_matrix, BetaSpec, DesignSpec, DesignType,
    NoiseModel,
};
use crate::lasso::{path_on_grid, GridSpec, LassoPath, LassoProblem, SolverOptions};
use crate::projection::{column_rank, lasso_ols_fit};
use crate::risk::{
    argmin_largest_lambda, estimate_sigma2_gcv, risk_cv_with, risk_sure_df, risk_sure_dfs, risk_sure_lasso,
    RiskCurve, RiskMethod, SigmaSource,
};
use crate::seed::{derive_seed, replication_seed, Stream};
use crate::smoother::{estimate_df, estimate_df_from_dims, DfMethod, KdeConfig};
use crate::stats::{column_estimates, normal_cdf, normal_pdf, trapezoid, McEstimate};
use crate::subset::{best_subset_path, DEFAULT_P_MAX};
use crate::{Error, Result};

fn default_methods() -> Vec<RiskMethod> {
    RiskMethod::ALL.to_vec()
}

fn default_sigma_mode() -> SigmaSource {
    SigmaSource::Known
}

fn default_estimator() -> DfMethod {
    DfMethod::LassoOls
}

fn default_name() -> String {
    "study".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub design: DesignSpec,
    pub beta: BetaSpec,
    pub noise: NoiseModel,
    pub n_reps: usize,
    /// Replications for the Monte Carlo truth behind the MSE tables;
    /// `None` uses `n_reps`, zero skips the tables.
    #[serde(default)]
    pub truth_reps: Option<usize>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_methods")]
    pub methods: Vec<RiskMethod>,
    #[serde(default = "default_sigma_mode")]
    pub sigma_mode: SigmaSource,
    /// Estimator used by the degrees of freedom check.
    #[serde(default = "default_estimator")]
    pub estimator: DfMethod,
    #[serde(default)]
    pub kde: KdeConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    pub root_seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        self.kde.validate()?;
        if self.n_reps < 2 {
            return Err(Error::InvalidParameter("a study needs at least 2 replications".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no tuning methods requested".into()));
        }
        if self.estimator == DfMethod::BestSubset && self.design.p > DEFAULT_P_MAX {
            return Err(Error::TooManyColumns {
                p: self.design.p,
                p_max: DEFAULT_P_MAX,
            });
        }
        build_beta(&self.beta, self.design.n, self.design.p)?;
        Ok(())
    }

    pub fn truth_reps(&self) -> usize {
        self.truth_reps.unwrap_or(self.n_reps)
    }

    /// SHA-256 of the JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: StudyConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything shared by the replications of a study.
struct Setup {
    source: Option<DMatrix<f64>>,
    beta: DVector<f64>,
    grid: Vec<f64>,
    /// The design when it does not change between replications.
    fixed_x: Option<DMatrix<f64>>,
}

struct Draw {
    x: DMatrix<f64>,
    mu: DVector<f64>,
    y: DVector<f64>,
}

fn draw(cfg: &StudyConfig, source: Option<&DMatrix<f64>>, fixed: Option<&DMatrix<f64>>, beta: &DVector<f64>, root: u64, rep: u64) -> Result<Draw> {
    let x = match fixed {
        Some(x) => x.clone(),
        None => build_design_with_source(&cfg.design, source, replication_seed(root, rep, Stream::Design))?.x,
    };
    let mu = &x * beta;
    let eps = draw_noise(&cfg.noise, cfg.design.n, replication_seed(root, rep, Stream::Noise))?;
    let y = &mu + eps;
    Ok(Draw { x, mu, y })
}

fn prepare(cfg: &StudyConfig) -> Result<Setup> {
    cfg.validate()?;
    let source = match cfg.design.design_type {
        DesignType::Empirical => {
            let path = cfg.design.empirical_source.as_ref().expect("validated");
            Some(load_csv_matrix(path, cfg.design.skip_header)?)
        }
        _ => None,
    };
    let beta = build_beta(&cfg.beta, cfg.design.n, cfg.design.p)?;
    let fixed_x = match cfg.design.design_type {
        DesignType::Orthogonal => Some(build_design_with_source(&cfg.design, None, 0)?.x),
        _ => None,
    };
    // A data-dependent grid is resolved once, from a pilot data set drawn
    // with its own seeds, so that every replication shares the grid.
    let pilot_root = derive_seed(cfg.root_seed, &[Stream::Pilot as u64]);
    let pilot = draw(cfg, source.as_ref(), fixed_x.as_ref(), &beta, pilot_root, 0)?;
    let grid = match (&cfg.grid, cfg.estimator) {
        (GridSpec::Auto { n_lambda, ratio }, DfMethod::BestSubset) => {
            let top = 0.5 * pilot.y.norm_squared();
            crate::lasso::log_spaced(top, top * ratio.unwrap_or(1e-4), *n_lambda)?
        }
        (grid, _) => {
            let lmax = (pilot.x.transpose() * &pilot.y).amax();
            grid.resolve(lmax, cfg.design.n, cfg.design.p)?
        }
    };
    Ok(Setup {
        source,
        beta,
        grid,
        fixed_x,
    })
}

impl Setup {
    fn draw(&self, cfg: &StudyConfig, root: u64, rep: u64) -> Result<Draw> {
        draw(cfg, self.source.as_ref(), self.fixed_x.as_ref(), &self.beta, root, rep)
    }
}

/// Resolved penalty grid of a study.
pub fn study_grid(cfg: &StudyConfig) -> Result<Vec<f64>> {
    Ok(prepare(cfg)?.grid)
}

fn lasso_path(cfg: &StudyConfig, x: &DMatrix<f64>, y: &DVector<f64>, grid: &[f64]) -> Result<LassoPath> {
    let mut problem = LassoProblem::new(x, y, cfg.solver)?;
    path_on_grid(&mut problem, x, y, grid)
}

/// Per-method outcome of one replication.
#[derive(Debug, Clone)]
struct RepOutcome {
    losses: Vec<f64>,
    selected: Vec<f64>,
    lambda_hat: Vec<f64>,
    curves: Vec<Vec<f64>>,
    seconds: Vec<f64>,
    oracle: f64,
}

fn replicate(cfg: &StudyConfig, setup: &Setup, rep: u64) -> Result<RepOutcome> {
    let d = setup.draw(cfg, cfg.root_seed, rep)?;
    let grid = &setup.grid;
    let t0 = Instant::now();
    let path = lasso_path(cfg, &d.x, &d.y, grid)?;
    let ols = lasso_ols_fit(&d.y, &path);
    let lasso = path.lasso_fits(&d.x);
    let shared = t0.elapsed().as_secs_f64();
    let (sigma2, source) = match cfg.sigma_mode {
        SigmaSource::Known => (cfg.noise.sigma * cfg.noise.sigma, SigmaSource::Known),
        SigmaSource::GcvEstimated => (
            estimate_sigma2_gcv(&d.y, &lasso, grid, &path.dims)?.0,
            SigmaSource::GcvEstimated,
        ),
    };
    let n = cfg.design.n as f64;
    let scale = cfg.noise.sigma * cfg.noise.sigma * n;
    let mut out = RepOutcome {
        losses: Vec::new(),
        selected: Vec::new(),
        lambda_hat: Vec::new(),
        curves: Vec::new(),
        seconds: Vec::new(),
        oracle: oracle_rank(&d.x, &setup.beta) as f64 / n,
    };
    for (m, &method) in cfg.methods.iter().enumerate() {
        let t = Instant::now();
        let curve: RiskCurve = match method {
            RiskMethod::Df => {
                let df = estimate_df(&path, DfMethod::LassoOls, &cfg.kde);
                risk_sure_df(&d.y, &ols, &df, sigma2, source)?
            }
            RiskMethod::DfS => risk_sure_dfs(&d.y, &ols, grid, &path.dims, sigma2, source)?,
            RiskMethod::Lasso => risk_sure_lasso(&d.y, &lasso, grid, &path.dims, sigma2, source)?,
            RiskMethod::Cv5 | RiskMethod::Cv10 => {
                let k = method.folds().expect("cv method");
                let seed = derive_seed(replication_seed(cfg.root_seed, rep, Stream::Folds), &[m as u64]);
                risk_cv_with(&d.x, &d.y, k, grid, sigma2, source, seed, cfg.solver)?
            }
        };
        let k = curve.index_hat;
        let fit = if method == RiskMethod::Lasso { &lasso[k] } else { &ols[k] };
        out.losses.push((&d.mu - fit).norm_squared() / scale);
        let count = if method == RiskMethod::Lasso { path.active_sets[k].len() } else { path.dims[k] };
        out.selected.push(count as f64);
        out.lambda_hat.push(curve.lambda_hat);
        out.curves.push(curve.values);
        out.seconds.push(shared + t.elapsed().as_secs_f64());
    }
    Ok(out)
}

fn oracle_rank(x: &DMatrix<f64>, beta: &DVector<f64>) -> usize {
    let support: Vec<usize> = (0..beta.len()).filter(|&j| beta[j] != 0.0).collect();
    column_rank(x, &support)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: RiskMethod,
    /// `||mu - mu_hat(lambda_hat)||^2 / (sigma^2 n)`.
    pub relative_risk: McEstimate,
    /// Selected dimension at the tuned penalty (lasso: active set size).
    pub selected: McEstimate,
    pub lambda_hat: McEstimate,
    /// Mean wall-clock seconds per replication, path included.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseRow {
    pub method: RiskMethod,
    /// Mean squared error of the risk estimate integrated over
    /// `log lambda` in `[log(lambda_opt / 10), log(10 lambda_opt)]`.
    pub integrated: f64,
    pub at_optimum: f64,
    /// Minimiser of the Monte Carlo truth.
    pub lambda_opt: f64,
    /// The integration window was cut by the grid.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub name: String,
    pub root_seed: u64,
    pub config_hash: String,
    pub lambda_grid: Vec<f64>,
    pub n_reps: usize,
    pub dropped: usize,
    pub methods: Vec<MethodSummary>,
    /// `rank(X_A) / n`, the relative risk of OLS on the true support.
    pub oracle_relative_risk: McEstimate,
    pub mse: Vec<MseRow>,
    /// Mean risk estimate on the grid, one curve per method.
    pub risk_curves: Vec<Vec<McEstimate>>,
    /// Monte Carlo truth `E ||mu - mu_hat||^2` on the grid, for the
    /// lasso-OLS and the lasso fit.
    pub truth_ols: Vec<McEstimate>,
    pub truth_lasso: Vec<McEstimate>,
}

impl StudyResult {
    pub fn method(&self, m: RiskMethod) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    pub fn mse_row(&self, m: RiskMethod) -> Option<&MseRow> {
        self.mse.iter().find(|s| s.method == m)
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "method",
            "relative_risk",
            "relative_risk_se",
            "selected",
            "selected_se",
            "lambda_hat",
            "lambda_hat_se",
        ])?;
        for s in &self.methods {
            w.write_record(&[
                s.method.name().to_string(),
                s.relative_risk.mean.to_string(),
                s.relative_risk.se.to_string(),
                s.selected.mean.to_string(),
                s.selected.se.to_string(),
                s.lambda_hat.mean.to_string(),
                s.lambda_hat.se.to_string(),
            ])?;
        }
        let o = &self.oracle_relative_risk;
        w.write_record(&["oracle".into(), o.mean.to_string(), o.se.to_string(), String::new(), String::new(), String::new(), String::new()])?;
        w.flush()?;
        Ok(())
    }

    pub fn write_mse_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "integrated_mse", "mse_at_optimum", "lambda_opt", "clipped"])?;
        for r in &self.mse {
            w.write_record(&[
                r.method.name().to_string(),
                r.integrated.to_string(),
                r.at_optimum.to_string(),
                r.lambda_opt.to_string(),
                r.clipped.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "lambda", "mean", "se"])?;
        for (s, curve) in self.methods.iter().zip(&self.risk_curves) {
            for (l, e) in self.lambda_grid.iter().zip(curve) {
                w.write_record(&[s.method.name().to_string(), l.to_string(), e.mean.to_string(), e.se.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_truth_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "risk_ols", "risk_ols_se", "risk_lasso", "risk_lasso_se"])?;
        for (k, l) in self.lambda_grid.iter().enumerate() {
            let (a, b) = (self.truth_ols[k], self.truth_lasso[k]);
            w.write_record(&[l.to_string(), a.mean.to_string(), a.se.to_string(), b.mean.to_string(), b.se.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the replications in parallel. Failed replications are dropped and
/// counted; more than 1% failures is an error.
fn run_replications<T, F>(n_reps: usize, f: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let results: Vec<Result<T>> = (0..n_reps as u64).into_par_iter().map(&f).collect();
    let mut ok = Vec::with_capacity(n_reps);
    let mut dropped = 0;
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::warn!("replication {rep} dropped: {e}");
                dropped += 1;
            }
        }
    }
    if dropped * 100 > n_reps {
        return Err(Error::TooManyFailures { dropped, total: n_reps });
    }
    Ok((ok, dropped))
}

/// Runs a full study: tuning losses per method and, unless `truth_reps` is
/// zero, the MSE of every risk estimate against the Monte Carlo truth.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    let setup = prepare(cfg)?;
    log::info!("{}: {} replications on a {}-point grid", cfg.name, cfg.n_reps, setup.grid.len());
    let (reps, dropped) = run_replications(cfg.n_reps, |rep| replicate(cfg, &setup, rep))?;
    let nm = cfg.methods.len();
    let column = |get: &dyn Fn(&RepOutcome) -> f64| {
        McEstimate::from_samples(&reps.iter().map(get).collect::<Vec<f64>>())
    };
    let methods = (0..nm)
        .map(|m| MethodSummary {
            method: cfg.methods[m],
            relative_risk: column(&|r| r.losses[m]),
            selected: column(&|r| r.selected[m]),
            lambda_hat: column(&|r| r.lambda_hat[m]),
            seconds: reps.iter().map(|r| r.seconds[m]).sum::<f64>() / reps.len() as f64,
        })
        .collect();
    let oracle_relative_risk = column(&|r| r.oracle);
    let risk_curves = (0..nm)
        .map(|m| column_estimates(&reps.iter().map(|r| r.curves[m].clone()).collect::<Vec<_>>()))
        .collect();

    let mut result = StudyResult {
        name: cfg.name.clone(),
        root_seed: cfg.root_seed,
        config_hash: cfg.hash(),
        lambda_grid: setup.grid.clone(),
        n_reps: reps.len(),
        dropped,
        methods,
        oracle_relative_risk,
        mse: Vec::new(),
        risk_curves,
        truth_ols: Vec::new(),
        truth_lasso: Vec::new(),
    };
    if cfg.truth_reps() > 0 {
        let (truth_ols, truth_lasso) = mc_truth(cfg, &setup)?;
        result.mse = (0..nm)
            .map(|m| {
                let method = cfg.methods[m];
                let truth = if method == RiskMethod::Lasso { &truth_lasso } else { &truth_ols };
                let curves: Vec<&Vec<f64>> = reps.iter().map(|r| &r.curves[m]).collect();
                mse_row(method, &setup.grid, &curves, truth)
            })
            .collect::<Result<Vec<_>>>()?;
        result.truth_ols = truth_ols;
        result.truth_lasso = truth_lasso;
    }
    Ok(result)
}

/// MSE table of the risk estimates; a study run restricted to its tables.
pub fn mse_of_risk_estimates(cfg: &StudyConfig) -> Result<Vec<MseRow>> {
    if cfg.truth_reps() == 0 {
        return Err(Error::InvalidParameter("MSE tables need truth_reps > 0".into()));
    }
    Ok(run_study(cfg)?.mse)
}

/// `E ||mu - mu_hat^lambda||^2` on the grid from independent replications.
fn mc_truth(cfg: &StudyConfig, setup: &Setup) -> Result<(Vec<McEstimate>, Vec<McEstimate>)> {
    let root = derive_seed(cfg.root_seed, &[Stream::Truth as u64]);
    log::info!("{}: {} truth replications", cfg.name, cfg.truth_reps());
    let (rows, _) = run_replications(cfg.truth_reps(), |rep| {
        let d = setup.draw(cfg, root, rep)?;
        let path = lasso_path(cfg, &d.x, &d.y, &setup.grid)?;
        let ols: Vec<f64> = lasso_ols_fit(&d.y, &path).iter().map(|f| (&d.mu - f).norm_squared()).collect();
        let lasso: Vec<f64> = path.lasso_fits(&d.x).iter().map(|f| (&d.mu - f).norm_squared()).collect();
        Ok((ols, lasso))
    })?;
    let (ols, lasso): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    Ok((column_estimates(&ols), column_estimates(&lasso)))
}

/// Squared error of the estimate curves against the truth, integrated over
/// a window of one decade either side of the truth's minimiser.
fn mse_row(method: RiskMethod, grid: &[f64], curves: &[&Vec<f64>], truth: &[McEstimate]) -> Result<MseRow> {
    let t: Vec<f64> = truth.iter().map(|e| e.mean).collect();
    let opt = argmin_largest_lambda(&t)?;
    let pointwise: Vec<f64> = (0..grid.len())
        .map(|k| {
            let sq: Vec<f64> = curves.iter().map(|c| (c[k] - t[k]).powi(2)).collect();
            McEstimate::from_samples(&sq).mean
        })
        .collect();
    let (integrated, clipped) = integrate_window(grid, &pointwise, grid[opt]);
    if clipped {
        log::warn!("{}: integration window around lambda={} clipped by the grid", method.name(), grid[opt]);
    }
    Ok(MseRow {
        method,
        integrated,
        at_optimum: pointwise[opt],
        lambda_opt: grid[opt],
        clipped,
    })
}

/// Trapezoid integral in `log lambda` over `[log(center/10), log(10 center)]`
/// intersected with the grid, interpolating linearly at the window ends.
pub fn integrate_window(grid: &[f64], values: &[f64], center: f64) -> (f64, bool) {
    let deltas: Vec<f64> = grid.iter().map(|l| l.ln()).collect();
    let (mut lo, mut hi) = (center.ln() - 10f64.ln(), center.ln() + 10f64.ln());
    let (gmin, gmax) = (deltas[deltas.len() - 1], deltas[0]);
    let clipped = lo < gmin || hi > gmax;
    lo = lo.max(gmin);
    hi = hi.min(gmax);
    // Ascending copy of the grid.
    let xs: Vec<f64> = deltas.iter().rev().copied().collect();
    let ys: Vec<f64> = values.iter().rev().copied().collect();
    let interp = |x: f64| {
        let i = xs.partition_point(|v| *v < x).clamp(1, xs.len() - 1);
        let (x0, x1) = (xs[i - 1], xs[i]);
        let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        ys[i - 1] + w * (ys[i] - ys[i - 1])
    };
    let mut px = vec![lo];
    let mut py = vec![interp(lo)];
    for (x, y) in xs.iter().zip(&ys) {
        if *x > lo && *x < hi {
            px.push(*x);
            py.push(*y);
        }
    }
    px.push(hi);
    py.push(interp(hi));
    (trapezoid(&px, &py), clipped)
}

/// Closed-form `(df_S, -lambda d/dlambda df_S)` of lasso-OLS for `X = I`,
/// where selection is `|y_i| > lambda`.
pub fn orthogonal_analytic(mu: &DVector<f64>, sigma: f64, lambda: f64) -> (f64, f64) {
    let psi = |x: f64, m: f64| normal_pdf((x - m) / sigma) / sigma;
    let df_s = mu
        .iter()
        .map(|&m| normal_cdf((-lambda - m) / sigma) + 1.0 - normal_cdf((lambda - m) / sigma))
        .sum();
    let slope = lambda * mu.iter().map(|&m| psi(lambda, m) + psi(-lambda, m)).sum::<f64>();
    (df_s, slope)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DfReport {
    pub estimator: DfMethod,
    pub lambda_grid: Vec<f64>,
    /// `sum_i cov(y_i, mu_hat_i) / sigma^2`.
    pub cov_df: Vec<McEstimate>,
    pub dim: Vec<McEstimate>,
    pub correction: Vec<McEstimate>,
    pub df_hat: Vec<McEstimate>,
    /// Closed forms for lasso-OLS on the identity design.
    pub analytic_df_s: Option<Vec<f64>>,
    pub analytic_df: Option<Vec<f64>>,
    /// Grid points where covariance df and the estimate differ by more than
    /// 3 combined standard errors.
    pub flagged: Vec<bool>,
}

impl DfReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "lambda",
            "cov_df",
            "cov_df_se",
            "dim",
            "dim_se",
            "correction",
            "df_hat",
            "df_hat_se",
            "analytic_df_s",
            "analytic_df",
            "flagged",
        ])?;
        let opt = |v: &Option<Vec<f64>>, k: usize| v.as_ref().map_or(String::new(), |v| v[k].to_string());
        for k in 0..self.lambda_grid.len() {
            w.write_record(&[
                self.lambda_grid[k].to_string(),
                self.cov_df[k].mean.to_string(),
                self.cov_df[k].se.to_string(),
                self.dim[k].mean.to_string(),
                self.dim[k].se.to_string(),
                self.correction[k].mean.to_string(),
                self.df_hat[k].mean.to_string(),
                self.df_hat[k].se.to_string(),
                opt(&self.analytic_df_s, k),
                opt(&self.analytic_df, k),
                self.flagged[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Monte Carlo check of `df = df_S - lambda d/dlambda df_S`: covariance
/// degrees of freedom against the mean selected dimension and the mean
/// estimate `dim + c * correction`. The design is drawn once and held fixed.
pub fn verify_df_identity(cfg: &StudyConfig) -> Result<DfReport> {
    let setup = prepare(cfg)?;
    let x = match &setup.fixed_x {
        Some(x) => x.clone(),
        None => build_design_with_source(&cfg.design, setup.source.as_ref(), replication_seed(cfg.root_seed, 0, Stream::Design))?.x,
    };
    let mu = &x * &setup.beta;
    let sigma = cfg.noise.sigma;
    let grid = &setup.grid;
    let m = grid.len();
    let (rows, _) = run_replications(cfg.n_reps, |rep| {
        let eps = draw_noise(&cfg.noise, cfg.design.n, replication_seed(cfg.root_seed, rep, Stream::Noise))?;
        let y = &mu + &eps;
        let (dims, fits) = match cfg.estimator {
            DfMethod::LassoOls => {
                let path = lasso_path(cfg, &x, &y, grid)?;
                (path.dims.clone(), lasso_ols_fit(&y, &path))
            }
            DfMethod::BestSubset => {
                let path = best_subset_path(&x, &y, grid)?;
                let fits = path.fits(&x, &y);
                (path.dims, fits)
            }
        };
        let est = estimate_df_from_dims(grid, &dims, cfg.estimator, &cfg.kde);
        let cov: Vec<f64> = fits.iter().map(|f| eps.dot(f) / (sigma * sigma)).collect();
        Ok((cov, est.df_s, est.correction, est.df))
    })?;
    let mut cov = Vec::with_capacity(rows.len());
    let mut dim = Vec::with_capacity(rows.len());
    let mut corr = Vec::with_capacity(rows.len());
    let mut dfh = Vec::with_capacity(rows.len());
    for (a, b, c, d) in rows {
        cov.push(a);
        dim.push(b);
        corr.push(c);
        dfh.push(d);
    }
    let cov_df = column_estimates(&cov);
    let df_hat = column_estimates(&dfh);
    let flagged = (0..m)
        .map(|k| (cov_df[k].mean - df_hat[k].mean).abs() > 3.0 * cov_df[k].combined_se(&df_hat[k]))
        .collect();
    let orthogonal = cfg.design.design_type == DesignType::Orthogonal && cfg.estimator == DfMethod::LassoOls;
    let (analytic_df_s, analytic_df) = if orthogonal {
        let pairs: Vec<(f64, f64)> = grid.iter().map(|&l| orthogonal_analytic(&mu, sigma, l)).collect();
        (
            Some(pairs.iter().map(|p| p.0).collect()),
            Some(pairs.iter().map(|p| p.0 + p.1).collect()),
        )
    } else {
        (None, None)
    };
    Ok(DfReport {
        estimator: cfg.estimator,
        lambda_grid: grid.clone(),
        cov_df,
        dim: column_estimates(&dim),
        correction: column_estimates(&corr),
        df_hat,
        analytic_df_s,
        analytic_df,
        flagged,
    })
}

/// Run metadata written next to the result tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub root_seed: u64,
    pub crate_version: String,
    pub config: StudyConfig,
    pub outputs: Vec<String>,
    /// Mean seconds per replication for each method.
    pub timings: Vec<(RiskMethod, f64)>,
}

impl Manifest {
    pub fn new(cfg: &StudyConfig, outputs: Vec<String>, timings: Vec<(RiskMethod, f64)>) -> Self {
        Manifest {
            name: cfg.name.clone(),
            config_hash: cfg.hash(),
            root_seed: cfg.root_seed,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            outputs,
            timings,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Writes `summary.csv`, `mse.csv`, `truth.csv` and `manifest.json` into
/// `dir` and returns the written paths.
pub fn write_study_outputs(cfg: &StudyConfig, result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let summary = dir.join("summary.csv");
    result.write_summary_csv(fs::File::create(&summary)?)?;
    written.push(summary);
    let curves = dir.join("curves.csv");
    result.write_curves_csv(fs::File::create(&curves)?)?;
    written.push(curves);
    if !result.mse.is_empty() {
        let mse = dir.join("mse.csv");
        result.write_mse_csv(fs::File::create(&mse)?)?;
        written.push(mse);
        let truth = dir.join("truth.csv");
        result.write_truth_csv(fs::File::create(&truth)?)?;
        written.push(truth);
    }
    let names = written
        .iter()
        .map(|p| p.file_name().expect("file name").to_string_lossy().into_owned())
        .collect();
    let timings = result.methods.iter().map(|s| (s.method, s.seconds)).collect();
    let manifest = dir.join("manifest.json");
    Manifest::new(cfg, names, timings).write(&manifest)?;
    written.push(manifest);
    Ok(written)
}
