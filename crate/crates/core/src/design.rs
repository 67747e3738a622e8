//! Design matrices, coefficient vectors and noise for the simulation studies.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal, SkewNormal, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DesignType {
    /// `X = I`, requires `n = p`.
    Orthogonal,
    /// Gaussian rows with `corr(X_i, X_j) = rho^|i-j|`.
    SimulatedAR,
    /// Gaussian rows with `corr(X_i, X_j) = rho` for `i != j`.
    SimulatedConstCorr,
    /// Rows and columns subsampled from a numeric CSV matrix.
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub design_type: DesignType,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub empirical_source: Option<PathBuf>,
    /// Skip one header row when reading `empirical_source`.
    #[serde(default)]
    pub skip_header: bool,
}

impl DesignSpec {
    pub fn orthogonal(n: usize) -> Self {
        DesignSpec {
            design_type: DesignType::Orthogonal,
            n,
            p: n,
            rho: 0.0,
            empirical_source: None,
            skip_header: false,
        }
    }

    pub fn simulated(design_type: DesignType, n: usize, p: usize, rho: f64) -> Self {
        DesignSpec {
            design_type,
            n,
            p,
            rho,
            empirical_source: None,
            skip_header: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::Dimension(format!(
                "design needs n, p >= 1 (got n={}, p={})",
                self.n, self.p
            )));
        }
        match self.design_type {
            DesignType::Orthogonal if self.n != self.p => Err(Error::Dimension(format!(
                "orthogonal design requires n = p (got n={}, p={})",
                self.n, self.p
            ))),
            DesignType::SimulatedAR | DesignType::SimulatedConstCorr
                if !(0.0..1.0).contains(&self.rho) =>
            {
                Err(Error::InvalidParameter(format!(
                    "rho must lie in [0, 1), got {}",
                    self.rho
                )))
            }
            DesignType::Empirical if self.empirical_source.is_none() => Err(
                Error::InvalidParameter("empirical design needs a source file".into()),
            ),
            _ => Ok(()),
        }
    }

    /// True when the columns are drawn from a continuous distribution, in
    /// which case they are in general position almost surely.
    pub fn is_continuous_random(&self) -> bool {
        matches!(
            self.design_type,
            DesignType::SimulatedAR | DesignType::SimulatedConstCorr
        )
    }
}

/// A design matrix together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub design_type: DesignType,
    /// Columns rescaled to unit Euclidean norm.
    pub standardized: bool,
}

impl Design {
    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }
}

/// Builds the design for `spec`, reading the empirical source if needed.
pub fn build_design(spec: &DesignSpec, seed: u64) -> Result<Design> {
    spec.validate()?;
    let source = match spec.design_type {
        DesignType::Empirical => {
            let path = spec.empirical_source.as_ref().expect("validated");
            Some(load_csv_matrix(path, spec.skip_header)?)
        }
        _ => None,
    };
    build_design_with_source(spec, source.as_ref(), seed)
}

/// Same as [`build_design`] with an already loaded empirical source, so
/// replication loops parse the file once.
pub fn build_design_with_source(
    spec: &DesignSpec,
    source: Option<&DMatrix<f64>>,
    seed: u64,
) -> Result<Design> {
    spec.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut x = match spec.design_type {
        DesignType::Orthogonal => {
            return Ok(Design {
                x: DMatrix::identity(spec.n, spec.p),
                design_type: DesignType::Orthogonal,
                standardized: false,
            })
        }
        DesignType::SimulatedAR | DesignType::SimulatedConstCorr => {
            correlated_gaussian(spec.design_type, spec.n, spec.p, spec.rho, &mut rng)
        }
        DesignType::Empirical => {
            let src = source.ok_or_else(|| {
                Error::InvalidParameter("empirical design needs a loaded source".into())
            })?;
            subsample(src, spec.n, spec.p, &mut rng).map_err(|reason| Error::EmpiricalSource {
                path: spec.empirical_source.clone().unwrap_or_default(),
                reason,
            })?
        }
    };
    standardize_columns(&mut x)?;
    Ok(Design {
        x,
        design_type: spec.design_type,
        standardized: true,
    })
}

/// Draws `n` i.i.d. mean-zero Gaussian rows with unit variances and the
/// AR(1) or constant correlation structure.
///
/// Both structures are generated through an exact square root of the
/// correlation matrix applied row by row: the AR(1) recursion is the
/// Cholesky factor of `rho^|i-j|`, and the constant correlation uses the
/// one-factor decomposition `rho * 11' + (1 - rho) I`.
pub fn correlated_gaussian<R: Rng + ?Sized>(
    design_type: DesignType,
    n: usize,
    p: usize,
    rho: f64,
    rng: &mut R,
) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, p);
    let innov = (1.0 - rho * rho).sqrt();
    let shared = rho.sqrt();
    let own = (1.0 - rho).sqrt();
    for i in 0..n {
        match design_type {
            DesignType::SimulatedAR => {
                let mut prev: f64 = rng.sample(StandardNormal);
                x[(i, 0)] = prev;
                for j in 1..p {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = rho * prev + innov * z;
                    x[(i, j)] = prev;
                }
            }
            DesignType::SimulatedConstCorr => {
                let w: f64 = rng.sample(StandardNormal);
                for j in 0..p {
                    let z: f64 = rng.sample(StandardNormal);
                    x[(i, j)] = shared * w + own * z;
                }
            }
            _ => unreachable!("only simulated designs are drawn here"),
        }
    }
    x
}

fn subsample<R: Rng + ?Sized>(
    src: &DMatrix<f64>,
    n: usize,
    p: usize,
    rng: &mut R,
) -> std::result::Result<DMatrix<f64>, String> {
    if n > src.nrows() || p > src.ncols() {
        return Err(format!(
            "requested {}x{} but the source is {}x{}",
            n,
            p,
            src.nrows(),
            src.ncols()
        ));
    }
    let rows = rand::seq::index::sample(rng, src.nrows(), n).into_vec();
    let cols = rand::seq::index::sample(rng, src.ncols(), p).into_vec();
    Ok(DMatrix::from_fn(n, p, |i, j| src[(rows[i], cols[j])]))
}

/// Rescales every column to unit Euclidean norm.
pub fn standardize_columns(x: &mut DMatrix<f64>) -> Result<()> {
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "column {j} has norm {norm} and cannot be standardized"
            )));
        }
        col /= norm;
    }
    Ok(())
}

/// Reads a comma-separated numeric matrix.
pub fn load_csv_matrix(path: &Path, skip_header: bool) -> Result<DMatrix<f64>> {
    let fail = |reason: String| Error::EmpiricalSource {
        path: path.to_path_buf(),
        reason,
    };
    if !path.exists() {
        return Err(fail("file not found".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(skip_header)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(fail(format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    record.len(),
                    w
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| fail(format!("row {}: cannot parse {field:?}", line + 1)))?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = width.ok_or_else(|| fail("no data rows".into()))?;
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

/// Signal decay and support fraction of the true coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSpec {
    pub gamma: f64,
    pub alpha: f64,
}

/// `beta_i = gamma^(i-1)` for `i <= ceil(n * alpha)`, zero otherwise.
pub fn build_beta(spec: &BetaSpec, n: usize, p: usize) -> Result<DVector<f64>> {
    if !(spec.gamma > 0.0 && spec.gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1], got {}",
            spec.gamma
        )));
    }
    if !(0.0..=1.0).contains(&spec.alpha) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in [0, 1], got {}",
            spec.alpha
        )));
    }
    let support = support_size(spec, n);
    if support > p {
        return Err(Error::Dimension(format!(
            "support size {support} exceeds p={p}"
        )));
    }
    let mut beta = DVector::zeros(p);
    let mut value = 1.0;
    for b in beta.iter_mut().take(support) {
        *b = value;
        value *= spec.gamma;
    }
    Ok(beta)
}

/// `ceil(n * alpha)`, computed so that exact products such as `100 * 0.1`
/// are not pushed up by rounding.
pub fn support_size(spec: &BetaSpec, n: usize) -> usize {
    let raw = n as f64 * spec.alpha;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseKind {
    Gaussian,
    StudentT3,
    SkewNormal3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

const SKEW_SHAPE: f64 = 3.0;

/// Location/scale making a shape-3 skew normal have mean 0 and variance `sigma^2`.
fn skew_normal_standardization(sigma: f64) -> (f64, f64) {
    let delta = SKEW_SHAPE / (1.0 + SKEW_SHAPE * SKEW_SHAPE).sqrt();
    let mean_unit = delta * (2.0 / std::f64::consts::PI).sqrt();
    let var_unit = 1.0 - 2.0 * delta * delta / std::f64::consts::PI;
    let omega = sigma / var_unit.sqrt();
    (-omega * mean_unit, omega)
}

/// Analytic skewness of the shape-3 skew normal.
pub fn skew_normal3_skewness() -> f64 {
    let delta = SKEW_SHAPE / (1.0 + SKEW_SHAPE * SKEW_SHAPE).sqrt();
    let m = delta * (2.0 / std::f64::consts::PI).sqrt();
    0.5 * (4.0 - std::f64::consts::PI) * m.powi(3) / (1.0 - m * m).powf(1.5)
}

pub fn draw_noise(model: &NoiseModel, n: usize, seed: u64) -> Result<DVector<f64>> {
    let mut rng = rng_from_seed(seed);
    draw_noise_with(model, n, &mut rng)
}

pub fn draw_noise_with<R: Rng + ?Sized>(
    model: &NoiseModel,
    n: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let sigma = model.sigma;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let noise = match model.kind {
        NoiseKind::Gaussian => {
            let d = Normal::new(0.0, sigma).expect("sigma checked");
            DVector::from_fn(n, |_, _| d.sample(rng))
        }
        NoiseKind::StudentT3 => {
            // Var(t_3) = 3.
            let d = StudentT::new(3.0).expect("valid degrees of freedom");
            let scale = sigma / 3f64.sqrt();
            DVector::from_fn(n, |_, _| scale * d.sample(rng))
        }
        NoiseKind::SkewNormal3 => {
            let (location, scale) = skew_normal_standardization(sigma);
            let d = SkewNormal::new(location, scale, SKEW_SHAPE).expect("valid skew normal");
            DVector::from_fn(n, |_, _| d.sample(rng))
        }
    };
    Ok(noise)
}
