//! Lasso solutions over a grid of penalties by coordinate descent.
//!
//! The objective is `0.5 * ||y - X b||^2 + lambda * ||b||_1`. The solver uses
//! covariance updates (Gram columns are computed lazily when a coefficient
//! first becomes nonzero), sequential strong-rule screening and active-set
//! iteration; every returned solution has been checked against the full KKT
//! conditions.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{path_projections, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative slack allowed in `|X_j'(y - Xb)| <= lambda`.
    pub kkt_tol: f64,
    /// Convergence threshold on `|delta b_j| * ||X_j||`, relative to `||y||`.
    pub cd_tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            kkt_tol: 1e-6,
            cd_tol: 1e-10,
            max_sweeps: 200_000,
        }
    }
}

/// Inner sweeps between attempts to solve the stationarity equations directly.
const POLISH_EVERY: usize = 10;

/// How the penalty grid is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `n_lambda` log-spaced values from `lambda_max = ||X'y||_inf` down to
    /// `ratio * lambda_max`; `ratio` defaults to 1e-3 (1e-2 when `p > n`).
    Auto {
        n_lambda: usize,
        #[serde(default)]
        ratio: Option<f64>,
    },
    /// Fixed log-spaced grid, identical for every data set.
    LogSpaced { max: f64, min: f64, n_lambda: usize },
    Explicit { lambdas: Vec<f64> },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            n_lambda: 100,
            ratio: None,
        }
    }
}

impl GridSpec {
    pub fn is_data_dependent(&self) -> bool {
        matches!(self, GridSpec::Auto { .. })
    }

    /// Resolves the grid, strictly decreasing.
    pub fn resolve(&self, lambda_max: f64, n: usize, p: usize) -> Result<Vec<f64>> {
        let grid = match self {
            GridSpec::Auto { n_lambda, ratio } => {
                let ratio = ratio.unwrap_or(if p > n { 1e-2 } else { 1e-3 });
                if !(lambda_max > 0.0) {
                    return Err(Error::InvalidParameter(
                        "lambda_max is zero (response orthogonal to every column)".into(),
                    ));
                }
                log_spaced(lambda_max, lambda_max * ratio, *n_lambda)?
            }
            GridSpec::LogSpaced { max, min, n_lambda } => log_spaced(*max, *min, *n_lambda)?,
            GridSpec::Explicit { lambdas } => lambdas.clone(),
        };
        validate_grid(&grid)?;
        Ok(grid)
    }
}

pub fn log_spaced(max: f64, min: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 points, got {count}"
        )));
    }
    if !(max > min && min > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid bounds must satisfy max > min > 0 (got {max}, {min})"
        )));
    }
    let (lo, hi) = (min.ln(), max.ln());
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k == 0 {
                max
            } else if k == count - 1 {
                min
            } else {
                (hi - step * k as f64).exp()
            }
        })
        .collect())
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    if grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("grid values must be positive".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Cached quantities for repeated solves on one `(X, y)`.
pub struct LassoProblem<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    xty: DVector<f64>,
    col_sq: Vec<f64>,
    col_norm: Vec<f64>,
    gram: Vec<Option<Vec<f64>>>,
    y_norm: f64,
    opts: SolverOptions,
}

/// Outcome of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub sweeps: usize,
    pub kkt_residual: f64,
}

impl<'a> LassoProblem<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &'a DVector<f64>, opts: SolverOptions) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension(format!(
                "X has {} rows but y has length {}",
                x.nrows(),
                y.len()
            )));
        }
        let xty = x.tr_mul(y);
        let col_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
        let col_norm = col_sq.iter().map(|s| s.sqrt()).collect();
        Ok(LassoProblem {
            x,
            y,
            xty,
            col_sq,
            col_norm,
            gram: vec![None; x.ncols()],
            y_norm: y.norm(),
            opts,
        })
    }

    pub fn lambda_max(&self) -> f64 {
        self.xty.amax()
    }

    fn ensure_gram(&mut self, k: usize) {
        if self.gram[k].is_none() {
            let g = self.x.tr_mul(&self.x.column(k));
            self.gram[k] = Some(g.as_slice().to_vec());
        }
    }

    fn residual(&self, beta: &[f64]) -> DVector<f64> {
        let mut r = self.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                r.axpy(-b, &self.x.column(j), 1.0);
            }
        }
        r
    }

    /// `X'(y - X beta)`.
    pub fn gradient(&self, beta: &[f64]) -> DVector<f64> {
        self.x.tr_mul(&self.residual(beta))
    }

    /// Solves at `lambda`, starting from (and overwriting) `beta`.
    /// `prev_lambda` enables the sequential strong rule.
    pub fn solve(
        &mut self,
        lambda: f64,
        beta: &mut [f64],
        prev_lambda: Option<f64>,
    ) -> Result<SolveInfo> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        let p = self.x.ncols();
        assert_eq!(beta.len(), p, "coefficient vector has wrong length");
        let lmax = self.lambda_max();
        if lambda >= lmax {
            beta.iter_mut().for_each(|b| *b = 0.0);
            return Ok(SolveInfo {
                sweeps: 0,
                kkt_residual: 0.0,
            });
        }
        let mut grad = self.gradient(beta);
        let screen = 2.0 * lambda - prev_lambda.unwrap_or(lmax).max(lambda);
        let mut in_work = vec![false; p];
        let mut work: Vec<usize> = Vec::new();
        for j in 0..p {
            if self.col_sq[j] > 0.0 && (beta[j] != 0.0 || grad[j].abs() >= screen) {
                in_work[j] = true;
                work.push(j);
            }
        }

        let tol = self.opts.cd_tol * self.y_norm.max(f64::MIN_POSITIVE);
        let mut sweeps = 0;
        loop {
            sweeps += self.coordinate_descent(lambda, beta, &work, grad.as_mut_slice(), tol, sweeps)?;
            grad = self.gradient(beta);
            let mut added = false;
            for j in 0..p {
                if !in_work[j] && self.col_sq[j] > 0.0 && grad[j].abs() > lambda {
                    in_work[j] = true;
                    work.push(j);
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        let kkt_residual = kkt_residual(&grad, beta, lambda);
        if kkt_residual > self.opts.kkt_tol * lambda + 1e-8 {
            return Err(Error::NonConvergence {
                lambda,
                iterations: sweeps,
                kkt_residual,
            });
        }
        Ok(SolveInfo {
            sweeps,
            kkt_residual,
        })
    }

    /// Cyclic coordinate descent restricted to `work`. `grad` must hold the
    /// exact gradient on `work` at entry and is kept current there.
    ///
    /// The support is never allowed to grow beyond `n`: a coordinate that
    /// would enter a full support is skipped and the sweep is reported as
    /// blocked, after which the active-set refinement frees room. If the
    /// sweep stays blocked the cap is dropped.
    fn coordinate_descent(
        &mut self,
        lambda: f64,
        beta: &mut [f64],
        work: &[usize],
        grad: &mut [f64],
        tol: f64,
        already: usize,
    ) -> Result<usize> {
        let mut cap = self.x.nrows();
        let mut sweeps = 0;
        let mut blocked_runs = 0;
        loop {
            let (change, blocked) = self.sweep(lambda, beta, work, work, grad, cap);
            sweeps += 1;
            if change < tol && !blocked {
                return Ok(sweeps);
            }
            // A full support that is already stationary can only improve by
            // swapping a coordinate in, so the cap is lifted after repeats.
            blocked_runs = if blocked { blocked_runs + 1 } else { 0 };
            if blocked_runs >= 3 {
                cap = usize::MAX;
            }
            if already + sweeps > self.opts.max_sweeps {
                return Err(self.non_convergence(lambda, beta, already + sweeps));
            }
            let active: Vec<usize> = work.iter().copied().filter(|&j| beta[j] != 0.0).collect();
            if self.polish(lambda, beta, &active, work, grad) {
                continue;
            }
            // Plain iterations on the nonzero coefficients until they settle.
            let mut inner = 0;
            loop {
                let (change, _) = self.sweep(lambda, beta, &active, work, grad, cap);
                sweeps += 1;
                inner += 1;
                if change < tol {
                    break;
                }
                if inner % POLISH_EVERY == 0 && self.polish(lambda, beta, &active, work, grad) {
                    break;
                }
                if already + sweeps > self.opts.max_sweeps {
                    return Err(self.non_convergence(lambda, beta, already + sweeps));
                }
            }
        }
    }

    /// Active-set refinement on the current support: solves the stationarity
    /// equations `X_A'X_A b_A = X_A'y - lambda s_A` for the current signs and
    /// moves towards that solution. If a coefficient would change sign, the
    /// step stops where it reaches zero, the coefficient leaves the support
    /// and the system is solved again. Every step lowers the objective. On
    /// success `grad` is recomputed on `work`.
    fn polish(
        &mut self,
        lambda: f64,
        beta: &mut [f64],
        active: &[usize],
        work: &[usize],
        grad: &mut [f64],
    ) -> bool {
        let mut support: Vec<usize> = active.to_vec();
        loop {
            let m = support.len();
            if m == 0 {
                break;
            }
            if m > self.x.nrows() {
                return false;
            }
            let gram_aa = DMatrix::from_fn(m, m, |r, c| {
                self.gram[support[c]].as_ref().expect("active gram cached")[support[r]]
            });
            let rhs = DVector::from_fn(m, |r, _| {
                self.xty[support[r]] - lambda * beta[support[r]].signum()
            });
            let Some(chol) = gram_aa.cholesky() else {
                return false;
            };
            let sol = chol.solve(&rhs);
            if sol.iter().any(|v| !v.is_finite()) {
                return false;
            }
            // Largest step in [0, 1] keeping every sign.
            let mut step = 1.0;
            let mut blocking = None;
            for (r, &j) in support.iter().enumerate() {
                let (cur, target) = (beta[j], sol[r]);
                if target == 0.0 || target.signum() != cur.signum() {
                    let t = cur / (cur - target);
                    if t < step {
                        step = t;
                        blocking = Some(r);
                    }
                }
            }
            for (r, &j) in support.iter().enumerate() {
                beta[j] += step * (sol[r] - beta[j]);
            }
            match blocking {
                None => break,
                Some(r) => {
                    beta[support[r]] = 0.0;
                    support.remove(r);
                }
            }
        }
        for &i in work {
            let mut g = self.xty[i];
            for &k in &support {
                g -= self.gram[k].as_ref().expect("active gram cached")[i] * beta[k];
            }
            grad[i] = g;
        }
        true
    }

    fn non_convergence(&self, lambda: f64, beta: &[f64], iterations: usize) -> Error {
        let grad = self.gradient(beta);
        Error::NonConvergence {
            lambda,
            iterations,
            kkt_residual: kkt_residual(&grad, beta, lambda),
        }
    }

    /// One pass over `coords`, keeping `grad` current on `work`. Returns the
    /// largest scaled coefficient change and whether an entry was refused
    /// because the support already had `cap` members.
    fn sweep(
        &mut self,
        lambda: f64,
        beta: &mut [f64],
        coords: &[usize],
        work: &[usize],
        grad: &mut [f64],
        cap: usize,
    ) -> (f64, bool) {
        let mut nnz = work.iter().filter(|&&j| beta[j] != 0.0).count();
        let mut blocked = false;
        let mut max_change: f64 = 0.0;
        for &j in coords {
            let d = self.col_sq[j];
            let old = beta[j];
            let z = grad[j] + d * old;
            let new = soft_threshold(z, lambda) / d;
            if new == old {
                continue;
            }
            if old == 0.0 {
                if nnz >= cap {
                    blocked = true;
                    continue;
                }
                nnz += 1;
            } else if new == 0.0 {
                nnz -= 1;
            }
            let delta = new - old;
            beta[j] = new;
            self.ensure_gram(j);
            let g = self.gram[j].as_ref().expect("gram column cached");
            for &i in work {
                grad[i] -= g[i] * delta;
            }
            max_change = max_change.max(delta.abs() * self.col_norm[j]);
        }
        (max_change, blocked)
    }
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Largest violation of the lasso optimality conditions.
fn kkt_residual(grad: &DVector<f64>, beta: &[f64], lambda: f64) -> f64 {
    grad.iter()
        .zip(beta)
        .map(|(g, b)| {
            if *b != 0.0 {
                (g - lambda * b.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Result of checking one solution against the KKT conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub max_abs_gradient: f64,
    pub max_sign_deviation: f64,
    pub satisfied: bool,
}

/// `max_j |X_j'(y - Xb)| <= lambda (1 + 1e-6) + 1e-8` and
/// `X_j'(y - Xb) / lambda = sign(b_j)` within 1e-6 on the support.
pub fn kkt_certificate(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: &DVector<f64>,
    lambda: f64,
) -> KktReport {
    let grad = x.tr_mul(&(y - x * beta));
    let max_abs_gradient = grad.amax();
    let max_sign_deviation = grad
        .iter()
        .zip(beta.iter())
        .filter(|(_, b)| **b != 0.0)
        .map(|(g, b)| (g / lambda - b.signum()).abs())
        .fold(0.0, f64::max);
    KktReport {
        max_abs_gradient,
        max_sign_deviation,
        satisfied: max_abs_gradient <= lambda * (1.0 + 1e-6) + 1e-8 && max_sign_deviation <= 1e-6,
    }
}

/// Single lasso solve.
pub fn solve_lasso(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    warm_start: Option<&DVector<f64>>,
) -> Result<DVector<f64>> {
    let mut problem = LassoProblem::new(x, y, SolverOptions::default())?;
    let mut beta = match warm_start {
        Some(w) if w.len() == x.ncols() => w.as_slice().to_vec(),
        Some(w) => {
            return Err(Error::Dimension(format!(
                "warm start has length {} but X has {} columns",
                w.len(),
                x.ncols()
            )))
        }
        None => vec![0.0; x.ncols()],
    };
    problem.solve(lambda, &mut beta, None)?;
    Ok(DVector::from_vec(beta))
}

/// `0.5 ||y - X b||^2 + lambda ||b||_1`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * (y - x * beta).norm_squared() + lambda * beta.lp_norm(1)
}

pub fn support(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Lasso solutions along a decreasing penalty grid.
#[derive(Debug, Clone)]
pub struct LassoPath {
    pub lambdas: Vec<f64>,
    pub coefs: Vec<DVector<f64>>,
    pub active_sets: Vec<Vec<usize>>,
    /// `dim(col(X_A))` for each active set.
    pub dims: Vec<usize>,
    pub objectives: Vec<f64>,
    /// Projections onto the selected column spaces, shared between grid
    /// points with equal active sets.
    pub projections: Vec<Arc<Projection>>,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `log lambda` for each grid point.
    pub fn log_lambdas(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l.ln()).collect()
    }

    /// Lasso fitted vectors `X b^lambda`.
    pub fn lasso_fits(&self, x: &DMatrix<f64>) -> Vec<DVector<f64>> {
        self.coefs.iter().map(|b| sparse_mul(x, b)).collect()
    }

    pub fn nnz(&self) -> Vec<usize> {
        self.active_sets.iter().map(|a| a.len()).collect()
    }

    /// CSV with columns `lambda,dim,nnz,objective`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "dim", "nnz", "objective"])?;
        for k in 0..self.len() {
            w.write_record(&[
                self.lambdas[k].to_string(),
                self.dims[k].to_string(),
                self.active_sets[k].len().to_string(),
                self.objectives[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self, include_coefs: bool) -> serde_json::Value {
        let points: Vec<serde_json::Value> = (0..self.len())
            .map(|k| {
                let mut v = serde_json::json!({
                    "lambda": self.lambdas[k],
                    "dim": self.dims[k],
                    "active_set": self.active_sets[k],
                    "objective": self.objectives[k],
                });
                if include_coefs {
                    v["coefficients"] = serde_json::json!(self.coefs[k].as_slice());
                }
                v
            })
            .collect();
        serde_json::json!({ "path": points })
    }
}

fn sparse_mul(x: &DMatrix<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(x.nrows());
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            out.axpy(b, &x.column(j), 1.0);
        }
    }
    out
}

/// Solves on every grid point with warm starts from the largest penalty down.
pub fn compute_path(x: &DMatrix<f64>, y: &DVector<f64>, grid: &GridSpec) -> Result<LassoPath> {
    compute_path_with(x, y, grid, SolverOptions::default())
}

pub fn compute_path_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    grid: &GridSpec,
    opts: SolverOptions,
) -> Result<LassoPath> {
    let mut problem = LassoProblem::new(x, y, opts)?;
    let lambdas = grid.resolve(problem.lambda_max(), x.nrows(), x.ncols())?;
    path_on_grid(&mut problem, x, y, &lambdas)
}

/// Path on an already resolved grid.
pub fn path_on_grid(
    problem: &mut LassoProblem<'_>,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambdas: &[f64],
) -> Result<LassoPath> {
    validate_grid(lambdas)?;
    let p = x.ncols();
    let mut beta = vec![0.0; p];
    let mut coefs = Vec::with_capacity(lambdas.len());
    let mut active_sets = Vec::with_capacity(lambdas.len());
    let mut objectives = Vec::with_capacity(lambdas.len());
    let mut prev = None;
    for &lambda in lambdas {
        problem.solve(lambda, &mut beta, prev)?;
        prev = Some(lambda);
        let b = DVector::from_column_slice(&beta);
        objectives.push(lasso_objective_sparse(x, y, &b, lambda));
        active_sets.push(support(&beta));
        coefs.push(b);
    }
    let mut path = LassoPath {
        lambdas: lambdas.to_vec(),
        coefs,
        active_sets,
        dims: Vec::new(),
        objectives,
        projections: Vec::new(),
    };
    path.projections = path_projections(x, &path);
    path.dims = path.projections.iter().map(|p| p.rank()).collect();
    Ok(path)
}

fn lasso_objective_sparse(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    0.5 * (y - sparse_mul(x, beta)).norm_squared() + lambda * beta.lp_norm(1)
}

/// `dim(col(X_A))` by rank-revealing QR.
pub fn selection_dimension(x: &DMatrix<f64>, active: &[usize]) -> usize {
    crate::projection::column_rank(x, active)
}

/// Outcome of the positive homogeneity check for the lasso selection sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCheck {
    pub holds: bool,
    pub active_scaled: Vec<usize>,
    pub active_unit: Vec<usize>,
    /// `max |b^lambda(lambda y) - lambda b^1(y)|`.
    pub coef_deviation: f64,
    pub coef_scale: f64,
}

/// Checks that the lasso at data `lambda * y` and penalty `lambda` selects the
/// same set as at data `y` and penalty 1, with coefficients scaled by `lambda`.
pub fn check_scaling_property(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<ScalingCheck> {
    let unit = solve_lasso(x, y, 1.0, None)?;
    let scaled_y = y * lambda;
    let scaled = solve_lasso(x, &scaled_y, lambda, None)?;
    let active_unit = support(unit.as_slice());
    let active_scaled = support(scaled.as_slice());
    let coef_deviation = (&scaled - &unit * lambda).amax();
    let coef_scale = 1.0 + lambda * unit.amax();
    Ok(ScalingCheck {
        holds: active_unit == active_scaled && coef_deviation <= 1e-8 * coef_scale,
        active_scaled,
        active_unit,
        coef_deviation,
        coef_scale,
    })
}
