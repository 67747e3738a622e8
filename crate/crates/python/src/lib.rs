use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::jumpdf::experiment::{run_study as run_study_rs, verify_df_identity, StudyConfig};
use ::jumpdf::lasso::{compute_path, GridSpec, LassoPath as RsPath};
use ::jumpdf::projection::lasso_ols_fit;
use ::jumpdf::risk::{
    estimate_sigma2_gcv, risk_cv, risk_sure_df, risk_sure_dfs, risk_sure_lasso, RiskMethod, SigmaSource,
};
use ::jumpdf::smoother::{estimate_df_from_dims, extract_jumps as extract_jumps_rs, DfMethod, KdeConfig};
use ::jumpdf::subset::{classify_region_2d, solve_best_subset, RegionMethod};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    if n == 0 || p == 0 {
        return Err(PyValueError::new_err("matrix must be non-empty"));
    }
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("matrix rows differ in length"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn df_method(name: &str) -> PyResult<DfMethod> {
    match name {
        "lasso_ols" => Ok(DfMethod::LassoOls),
        "best_subset" => Ok(DfMethod::BestSubset),
        _ => Err(PyValueError::new_err(format!("unknown method {name:?}"))),
    }
}

/// Lasso solutions on a log-spaced grid from lambda_max.
#[pyclass(name = "LassoPath", frozen)]
struct PyLassoPath {
    x: DMatrix<f64>,
    y: DVector<f64>,
    path: RsPath,
}

#[pymethods]
impl PyLassoPath {
    #[new]
    #[pyo3(signature = (x, y, n_lambda = 100, ratio = None))]
    fn new(x: Vec<Vec<f64>>, y: Vec<f64>, n_lambda: usize, ratio: Option<f64>) -> PyResult<Self> {
        let x = matrix(x)?;
        let y = DVector::from_vec(y);
        let path = compute_path(&x, &y, &GridSpec::Auto { n_lambda, ratio }).map_err(err)?;
        Ok(PyLassoPath { x, y, path })
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.path.lambdas.clone()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.path.dims.clone()
    }

    #[getter]
    fn active_sets(&self) -> Vec<Vec<usize>> {
        self.path.active_sets.clone()
    }

    fn coefficients(&self, index: usize) -> PyResult<Vec<f64>> {
        self.path
            .coefs
            .get(index)
            .map(|b| b.as_slice().to_vec())
            .ok_or_else(|| PyValueError::new_err("grid index out of range"))
    }

    /// Fitted vectors of the OLS refit on each selected set.
    fn ols_fits(&self) -> Vec<Vec<f64>> {
        lasso_ols_fit(&self.y, &self.path)
            .iter()
            .map(|f| f.as_slice().to_vec())
            .collect()
    }

    fn lasso_fits(&self) -> Vec<Vec<f64>> {
        self.path
            .lasso_fits(&self.x)
            .iter()
            .map(|f| f.as_slice().to_vec())
            .collect()
    }

    /// Jump-corrected degrees of freedom on the grid.
    #[pyo3(signature = (method = "lasso_ols"))]
    fn df<'py>(&self, py: Python<'py>, method: &str) -> PyResult<Bound<'py, PyDict>> {
        let est = estimate_df_from_dims(&self.path.lambdas, &self.path.dims, df_method(method)?, &KdeConfig::default());
        let d = PyDict::new(py);
        d.set_item("lambda", est.lambda_grid)?;
        d.set_item("df_s", est.df_s)?;
        d.set_item("correction", est.correction)?;
        d.set_item("df", est.df)?;
        Ok(d)
    }

    fn __len__(&self) -> usize {
        self.path.len()
    }
}

/// Jump locations (log lambda) and sizes of the monotone dimension envelope.
#[pyfunction]
fn extract_jumps(lambdas: Vec<f64>, dims: Vec<usize>) -> PyResult<(Vec<f64>, Vec<usize>)> {
    if lambdas.len() != dims.len() {
        return Err(PyValueError::new_err("lambdas and dims differ in length"));
    }
    let rec = extract_jumps_rs(&lambdas, &dims);
    Ok((rec.deltas, rec.multiplicities))
}

#[pyfunction]
#[pyo3(signature = (lambdas, dims, method = "lasso_ols"))]
fn estimate_df(lambdas: Vec<f64>, dims: Vec<usize>, method: &str) -> PyResult<Vec<f64>> {
    if lambdas.len() != dims.len() {
        return Err(PyValueError::new_err("lambdas and dims differ in length"));
    }
    Ok(estimate_df_from_dims(&lambdas, &dims, df_method(method)?, &KdeConfig::default()).df)
}

/// Tuned lambda per risk estimate for one data set.
#[pyfunction]
#[pyo3(signature = (x, y, sigma = None, n_lambda = 100, seed = 0))]
fn tune<'py>(
    py: Python<'py>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    sigma: Option<f64>,
    n_lambda: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let x = matrix(x)?;
    let y = DVector::from_vec(y);
    let path = compute_path(&x, &y, &GridSpec::Auto { n_lambda, ratio: None }).map_err(err)?;
    let lasso = path.lasso_fits(&x);
    let ols = lasso_ols_fit(&y, &path);
    let (sigma2, source) = match sigma {
        Some(s) => (s * s, SigmaSource::Known),
        None => (
            estimate_sigma2_gcv(&y, &lasso, &path.lambdas, &path.dims).map_err(err)?.0,
            SigmaSource::GcvEstimated,
        ),
    };
    let df = estimate_df_from_dims(&path.lambdas, &path.dims, DfMethod::LassoOls, &KdeConfig::default());
    let out = PyDict::new(py);
    out.set_item("sigma2", sigma2)?;
    for method in RiskMethod::ALL {
        let curve = match method {
            RiskMethod::Df => risk_sure_df(&y, &ols, &df, sigma2, source),
            RiskMethod::DfS => risk_sure_dfs(&y, &ols, &path.lambdas, &path.dims, sigma2, source),
            RiskMethod::Lasso => risk_sure_lasso(&y, &lasso, &path.lambdas, &path.dims, sigma2, source),
            RiskMethod::Cv5 | RiskMethod::Cv10 => {
                let k = method.folds().expect("cv method");
                if x.nrows() < k {
                    continue;
                }
                risk_cv(&x, &y, k, &path.lambdas, sigma2, source, seed)
            }
        }
        .map_err(err)?;
        out.set_item(method.name(), curve.lambda_hat)?;
    }
    Ok(out)
}

/// Best subset at penalty `lam`: (selected columns, objective, fitted values).
#[pyfunction]
fn best_subset(x: Vec<Vec<f64>>, y: Vec<f64>, lam: f64) -> PyResult<(Vec<usize>, f64, Vec<f64>)> {
    let x = matrix(x)?;
    let sol = solve_best_subset(&x, &DVector::from_vec(y), lam).map_err(err)?;
    Ok((sol.best_set, sol.objective, sol.fitted.as_slice().to_vec()))
}

/// Selected columns for a response in the plane under a 2x2 design.
#[pyfunction]
#[pyo3(signature = (x, lam, point, method = "lasso"))]
fn classify_region(x: Vec<Vec<f64>>, lam: f64, point: (f64, f64), method: &str) -> PyResult<Vec<usize>> {
    let method = match method {
        "lasso" => RegionMethod::Lasso,
        "best_subset" => RegionMethod::BestSubset,
        _ => return Err(PyValueError::new_err(format!("unknown method {method:?}"))),
    };
    let mask = classify_region_2d(&matrix(x)?, lam, point, method).map_err(err)?;
    Ok((0..2).filter(|j| mask & (1 << j) != 0).collect())
}

/// Runs a study from a JSON configuration and returns the result as JSON.
#[pyfunction]
fn run_study(config_json: &str) -> PyResult<String> {
    let cfg: StudyConfig = serde_json::from_str(config_json).map_err(err)?;
    let res = run_study_rs(&cfg).map_err(err)?;
    serde_json::to_string(&res).map_err(err)
}

#[pyfunction]
fn verify_df(config_json: &str) -> PyResult<String> {
    let cfg: StudyConfig = serde_json::from_str(config_json).map_err(err)?;
    let rep = verify_df_identity(&cfg).map_err(err)?;
    serde_json::to_string(&rep).map_err(err)
}

#[pymodule]
fn jumpdf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLassoPath>()?;
    m.add_function(wrap_pyfunction!(extract_jumps, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_df, m)?)?;
    m.add_function(wrap_pyfunction!(tune, m)?)?;
    m.add_function(wrap_pyfunction!(best_subset, m)?)?;
    m.add_function(wrap_pyfunction!(classify_region, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(verify_df, m)?)?;
    Ok(())
}
