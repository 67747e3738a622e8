//! Lagrangian best subset selection by exhaustive enumeration, selection
//! regions in two dimensions, and Monte Carlo degrees of freedom.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lasso::{log_spaced, solve_lasso, support, validate_grid, ScalingCheck};
use crate::projection::{make_projection, Projection};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::McEstimate;
use crate::{Error, Result};

/// Largest number of columns enumerated by default.
pub const DEFAULT_P_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSolution {
    pub lambda: f64,
    pub best_set: Vec<usize>,
    /// `lambda |A| - ||Pi_A y||^2 / 2`.
    pub objective: f64,
    pub fitted: DVector<f64>,
}

/// Best projected norm `||Pi_A y||^2` for every subset size, with the
/// lexicographically first maximiser.
#[derive(Debug, Clone)]
pub struct SubsetTable {
    pub best_by_size: Vec<(f64, Vec<usize>)>,
    tol: f64,
}

impl SubsetTable {
    /// Enumerates all subsets of the columns of `x`.
    pub fn build(x: &DMatrix<f64>, y: &DVector<f64>, p_max: usize) -> Result<Self> {
        let (n, p) = x.shape();
        if y.len() != n {
            return Err(Error::Dimension(format!("X has {n} rows, y has {}", y.len())));
        }
        if p > p_max {
            return Err(Error::TooManyColumns { p, p_max });
        }
        let mut best = vec![(f64::NEG_INFINITY, Vec::new()); p + 1];
        best[0] = (0.0, Vec::new());
        let tol = 1e-12 * y.norm_squared();
        let mut set = Vec::with_capacity(p);
        // Depth-first search visits the subsets of each size in
        // lexicographic order, so only strict improvements replace.
        dfs(x, y.as_slice(), &Projection::empty(n), 0, &mut set, &mut best, tol);
        Ok(SubsetTable {
            best_by_size: best,
            tol,
        })
    }

    /// Minimiser of `lambda k - best_k / 2`, ties to the smaller size.
    pub fn select(&self, lambda: f64) -> (&[usize], f64) {
        let mut pick = 0;
        let mut obj = 0.0;
        for (k, (val, _)) in self.best_by_size.iter().enumerate().skip(1) {
            let o = lambda * k as f64 - 0.5 * val;
            if o < obj - self.tol {
                pick = k;
                obj = o;
            }
        }
        (&self.best_by_size[pick].1, obj)
    }
}

fn dfs(
    x: &DMatrix<f64>,
    y: &[f64],
    proj: &Projection,
    start: usize,
    set: &mut Vec<usize>,
    best: &mut [(f64, Vec<usize>)],
    tol: f64,
) {
    for j in start..x.ncols() {
        let mut next = proj.clone();
        next.extend(x, j);
        set.push(j);
        let val = next.projected_norm_sq(y);
        let slot = &mut best[set.len()];
        if val > slot.0 + tol {
            *slot = (val, set.clone());
        }
        dfs(x, y, &next, j + 1, set, best, tol);
        set.pop();
    }
}

/// Minimiser of `||y - X b||^2 / 2 + lambda ||b||_0`.
pub fn solve_best_subset(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<SubsetSolution> {
    check_lambda(lambda)?;
    let table = SubsetTable::build(x, y, DEFAULT_P_MAX)?;
    let (set, objective) = table.select(lambda);
    Ok(SubsetSolution {
        lambda,
        best_set: set.to_vec(),
        objective,
        fitted: make_projection(x, set).apply(y.as_slice()),
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")))
    }
}

/// Least-squares coefficients of a subset solution, zero off the set.
pub fn subset_coefficients(x: &DMatrix<f64>, y: &DVector<f64>, set: &[usize]) -> DVector<f64> {
    let mut beta = DVector::zeros(x.ncols());
    for (j, b) in make_projection(x, set).coefficients(y.as_slice()) {
        beta[j] = b;
    }
    beta
}

/// Best subset solutions along a decreasing grid.
#[derive(Debug, Clone)]
pub struct SubsetPath {
    pub lambdas: Vec<f64>,
    pub active_sets: Vec<Vec<usize>>,
    pub dims: Vec<usize>,
    pub objectives: Vec<f64>,
}

impl SubsetPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn fits(&self, x: &DMatrix<f64>, y: &DVector<f64>) -> Vec<DVector<f64>> {
        self.active_sets
            .iter()
            .map(|s| make_projection(x, s).apply(y.as_slice()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "size", "rank", "objective"])?;
        for k in 0..self.len() {
            w.write_record(&[
                self.lambdas[k].to_string(),
                self.active_sets[k].len().to_string(),
                self.dims[k].to_string(),
                self.objectives[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn best_subset_path(x: &DMatrix<f64>, y: &DVector<f64>, lambdas: &[f64]) -> Result<SubsetPath> {
    validate_grid(lambdas)?;
    let table = SubsetTable::build(x, y, DEFAULT_P_MAX)?;
    let mut path = SubsetPath {
        lambdas: lambdas.to_vec(),
        active_sets: Vec::with_capacity(lambdas.len()),
        dims: Vec::with_capacity(lambdas.len()),
        objectives: Vec::with_capacity(lambdas.len()),
    };
    for &l in lambdas {
        let (set, obj) = table.select(l);
        path.dims.push(make_projection(x, set).rank());
        path.active_sets.push(set.to_vec());
        path.objectives.push(obj);
    }
    Ok(path)
}

/// Grid from `||y||^2 / 2`, above which the empty set wins, down by
/// `ratio`.
pub fn default_subset_grid(y: &DVector<f64>, count: usize, ratio: f64) -> Result<Vec<f64>> {
    let top = 0.5 * y.norm_squared();
    log_spaced(top, top * ratio, count)
}

/// Checks that best subset at data `sqrt(lambda) y` and penalty `lambda`
/// selects the same set as at data `y` and penalty 1, with coefficients
/// scaled by `sqrt(lambda)`.
pub fn check_subset_scaling(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<ScalingCheck> {
    check_lambda(lambda)?;
    let c = lambda.sqrt();
    let unit = solve_best_subset(x, y, 1.0)?;
    let scaled_y = y * c;
    let scaled = solve_best_subset(x, &scaled_y, lambda)?;
    let b_unit = subset_coefficients(x, y, &unit.best_set);
    let b_scaled = subset_coefficients(x, &scaled_y, &scaled.best_set);
    let coef_deviation = (&b_scaled - &b_unit * c).amax();
    let coef_scale = 1.0 + c * b_unit.amax();
    Ok(ScalingCheck {
        holds: unit.best_set == scaled.best_set && coef_deviation <= 1e-8 * coef_scale,
        active_scaled: scaled.best_set,
        active_unit: unit.best_set,
        coef_deviation,
        coef_scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMethod {
    Lasso,
    BestSubset,
}

/// Selected set of a two-column design, encoded as a bit mask
/// (bit 0 for column 1, bit 1 for column 2).
pub fn classify_region_2d(x: &DMatrix<f64>, lambda: f64, point: (f64, f64), method: RegionMethod) -> Result<u8> {
    if x.shape() != (2, 2) {
        return Err(Error::Dimension(format!("region classification needs a 2x2 design, got {:?}", x.shape())));
    }
    let y = DVector::from_vec(vec![point.0, point.1]);
    let set = match method {
        RegionMethod::Lasso => support(solve_lasso(x, &y, lambda, None)?.as_slice()),
        RegionMethod::BestSubset => solve_best_subset(x, &y, lambda)?.best_set,
    };
    Ok(set.iter().fold(0u8, |m, &j| m | (1 << j)))
}

pub fn region_label(mask: u8) -> &'static str {
    match mask {
        0 => "{}",
        1 => "{1}",
        2 => "{2}",
        _ => "{1,2}",
    }
}

/// Classification of a square grid of responses.
#[derive(Debug, Clone)]
pub struct RegionGrid {
    pub coords: Vec<f64>,
    /// Row-major labels, `labels[i * m + j]` at `(coords[j], coords[i])`.
    pub labels: Vec<u8>,
}

impl RegionGrid {
    pub fn side(&self) -> usize {
        self.coords.len()
    }

    pub fn label_at(&self, i: usize, j: usize) -> u8 {
        self.labels[i * self.side() + j]
    }

    /// Number of 4-connected components carrying `mask`.
    pub fn components(&self, mask: u8) -> usize {
        let m = self.side();
        let mut seen = vec![false; m * m];
        let mut count = 0;
        for start in 0..m * m {
            if seen[start] || self.labels[start] != mask {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(c) = queue.pop_front() {
                let (i, j) = (c / m, c % m);
                let mut push = |ni: usize, nj: usize| {
                    let idx = ni * m + nj;
                    if !seen[idx] && self.labels[idx] == mask {
                        seen[idx] = true;
                        queue.push_back(idx);
                    }
                };
                if i > 0 {
                    push(i - 1, j);
                }
                if i + 1 < m {
                    push(i + 1, j);
                }
                if j > 0 {
                    push(i, j - 1);
                }
                if j + 1 < m {
                    push(i, j + 1);
                }
            }
        }
        count
    }

    /// Whether some cell labelled `a` touches a cell labelled `b`.
    pub fn adjacent(&self, a: u8, b: u8) -> bool {
        let m = self.side();
        (0..m).any(|i| {
            (0..m).any(|j| {
                let here = self.label_at(i, j);
                (j + 1 < m && matches_pair(here, self.label_at(i, j + 1), a, b))
                    || (i + 1 < m && matches_pair(here, self.label_at(i + 1, j), a, b))
            })
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["y1", "y2", "label"])?;
        let m = self.side();
        for i in 0..m {
            for j in 0..m {
                w.write_record(&[
                    self.coords[j].to_string(),
                    self.coords[i].to_string(),
                    region_label(self.label_at(i, j)).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn matches_pair(u: u8, v: u8, a: u8, b: u8) -> bool {
    (u == a && v == b) || (u == b && v == a)
}

/// Classifies `side x side` responses on `[-half_width, half_width]^2`.
pub fn region_grid(
    x: &DMatrix<f64>,
    lambda: f64,
    method: RegionMethod,
    half_width: f64,
    side: usize,
) -> Result<RegionGrid> {
    if side < 2 || !(half_width > 0.0) {
        return Err(Error::InvalidParameter("region grid needs side >= 2 and positive width".into()));
    }
    let coords: Vec<f64> = (0..side)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (side - 1) as f64)
        .collect();
    let labels = (0..side * side)
        .into_par_iter()
        .map(|c| classify_region_2d(x, lambda, (coords[c % side], coords[c / side]), method))
        .collect::<Result<Vec<u8>>>()?;
    Ok(RegionGrid { coords, labels })
}

/// Two unit columns at angle `degrees`.
pub fn angled_design(degrees: f64) -> DMatrix<f64> {
    let t = degrees.to_radians();
    DMatrix::from_column_slice(2, 2, &[1.0, 0.0, t.cos(), t.sin()])
}

/// Monte Carlo degrees of freedom `sum_i cov(y_i, f_i(y)) / sigma^2` for an
/// estimator returning one fitted vector per grid point. Replication `r`
/// draws its noise from `derive_seed(seed, [r])`.
pub fn mc_df_covariance_grid<F>(
    estimator: F,
    mu: &DVector<f64>,
    sigma: f64,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<McEstimate>>
where
    F: Fn(&DVector<f64>) -> Result<Vec<DVector<f64>>> + Sync,
{
    if n_reps < 2 {
        return Err(Error::InvalidParameter("need at least 2 replications".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let n = mu.len();
    let rows = (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
            let eps = DVector::from_fn(n, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            });
            let y = mu + &eps;
            let fits = estimator(&y)?;
            Ok(fits.iter().map(|f| eps.dot(f) / (sigma * sigma)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(crate::stats::column_estimates(&rows))
}

pub fn mc_df_covariance<F>(estimator: F, mu: &DVector<f64>, sigma: f64, n_reps: usize, seed: u64) -> Result<McEstimate>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>> + Sync,
{
    let est = mc_df_covariance_grid(|y| Ok(vec![estimator(y)?]), mu, sigma, n_reps, seed)?;
    Ok(est[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::normal_pdf;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| { let z: f64 = StandardNormal.sample(&mut rng); z })
    }

    /// Objective of every subset by direct least squares.
    fn brute_force(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> (Vec<usize>, f64) {
        let p = x.ncols();
        let mut best: Option<(Vec<usize>, f64)> = None;
        for mask in 0u32..(1 << p) {
            let set: Vec<usize> = (0..p).filter(|j| mask & (1 << j) != 0).collect();
            let rss = if set.is_empty() {
                y.norm_squared()
            } else {
                let xa = DMatrix::from_fn(x.nrows(), set.len(), |i, k| x[(i, set[k])]);
                let svd = xa.clone().svd(true, true);
                let b = svd.solve(y, 1e-12).unwrap();
                (y - &xa * b).norm_squared()
            };
            let obj = 0.5 * rss + lambda * set.len() as f64;
            let better = match &best {
                None => true,
                Some((s, o)) => {
                    obj < o - 1e-9 || ((obj - o).abs() <= 1e-9 && (set.len(), &set) < (s.len(), s))
                }
            };
            if better {
                best = Some((set, obj));
            }
        }
        best.unwrap()
    }

    #[test]
    fn orthogonal_example() {
        let x = DMatrix::<f64>::identity(2, 2);
        let y = DVector::from_vec(vec![2.0, 0.5]);
        let sol = solve_best_subset(&x, &y, 1.0).unwrap();
        assert_eq!(sol.best_set, vec![0]);
        assert_eq!(sol.fitted, DVector::from_vec(vec![2.0, 0.0]));
        assert_abs_diff_eq!(sol.objective, 1.0 - 2.0, epsilon = 1e-12);
        // Threshold sqrt(2 lambda): 1.41 stays out, 1.42 enters.
        let y = DVector::from_vec(vec![1.42, 1.41]);
        assert_eq!(solve_best_subset(&x, &y, 1.0).unwrap().best_set, vec![0]);
    }

    #[test]
    fn extreme_penalties() {
        let x = random_matrix(6, 4, 1);
        let y = random_matrix(6, 1, 2).column(0).clone_owned();
        let full = solve_best_subset(&x, &y, 1e-9).unwrap();
        assert_eq!(full.best_set, vec![0, 1, 2, 3]);
        let empty = solve_best_subset(&x, &y, 0.5 * y.norm_squared() * 1.001).unwrap();
        assert!(empty.best_set.is_empty());
        assert_eq!(empty.fitted, DVector::zeros(6));
    }

    #[test]
    fn too_many_columns() {
        let x = DMatrix::zeros(3, 21);
        let y = DVector::zeros(3);
        assert!(matches!(
            solve_best_subset(&x, &y, 1.0),
            Err(Error::TooManyColumns { p: 21, p_max: 20 })
        ));
    }

    #[test]
    fn ties_prefer_smaller_then_lexicographic() {
        // Mirror-image columns: {1} and {2} tie, the first is chosen.
        let x = DMatrix::from_column_slice(2, 2, &[1.0, 0.1, 1.0, -0.1]);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(solve_best_subset(&x, &y, 0.1).unwrap().best_set, vec![0]);
        // At the empty/full boundary of the identity design the smaller set wins.
        let id = DMatrix::<f64>::identity(2, 2);
        let y = DVector::from_vec(vec![2.0, 2.0]);
        assert!(solve_best_subset(&id, &y, 2.0).unwrap().best_set.is_empty());
        // Duplicated column never beats the original.
        let mut x = random_matrix(5, 3, 3);
        let c = x.column(0).clone_owned();
        x.set_column(2, &c);
        let y = random_matrix(5, 1, 4).column(0).clone_owned();
        let sol = solve_best_subset(&x, &y, 1e-6).unwrap();
        assert_eq!(sol.best_set, vec![0, 1]);
    }

    #[test]
    fn path_dims_and_csv() {
        let x = random_matrix(8, 5, 5);
        let y = random_matrix(8, 1, 6).column(0).clone_owned();
        let grid = default_subset_grid(&y, 20, 1e-4).unwrap();
        let path = best_subset_path(&x, &y, &grid).unwrap();
        assert!(path.active_sets[0].is_empty());
        for k in 0..path.len() {
            let direct = solve_best_subset(&x, &y, grid[k]).unwrap();
            assert_eq!(path.active_sets[k], direct.best_set);
            assert_eq!(path.dims[k], direct.best_set.len());
        }
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "lambda,size,rank,objective");
        assert_eq!(text.lines().count(), 21);
    }

    #[test]
    fn lasso_region_examples() {
        let x = DMatrix::<f64>::identity(2, 2);
        assert_eq!(classify_region_2d(&x, 1.0, (2.0, 0.1), RegionMethod::Lasso).unwrap(), 1);
        assert_eq!(classify_region_2d(&x, 1.0, (0.5, 0.5), RegionMethod::Lasso).unwrap(), 0);
        assert_eq!(classify_region_2d(&x, 1.0, (-3.0, 2.0), RegionMethod::Lasso).unwrap(), 3);
        assert_eq!(classify_region_2d(&x, 1.0, (2.0, 1.0), RegionMethod::BestSubset).unwrap(), 1);
        assert!(classify_region_2d(&DMatrix::identity(3, 3), 1.0, (0.0, 0.0), RegionMethod::Lasso).is_err());
        assert_eq!(region_label(3), "{1,2}");
    }

    #[test]
    fn orthogonal_subset_is_hard_thresholding() {
        // Lasso-OLS selection at threshold t equals best subset at t^2 / 2.
        let x = DMatrix::<f64>::identity(2, 2);
        let t: f64 = 1.3;
        let lasso = region_grid(&x, t, RegionMethod::Lasso, 3.0, 41).unwrap();
        let bss = region_grid(&x, 0.5 * t * t, RegionMethod::BestSubset, 3.0, 41).unwrap();
        assert_eq!(lasso.labels, bss.labels);
    }

    #[test]
    fn region_topology() {
        for (degrees, method, lambda) in [
            (90.0, RegionMethod::Lasso, 1.0),
            (60.0, RegionMethod::Lasso, 1.0),
            (90.0, RegionMethod::BestSubset, 0.5),
            (60.0, RegionMethod::BestSubset, 0.5),
        ] {
            let x = angled_design(degrees);
            let g = region_grid(&x, lambda, method, 4.0, 81).unwrap();
            let m = g.side();
            // Odd symmetry y -> -y leaves the selected set unchanged.
            for i in 0..m {
                for j in 0..m {
                    assert_eq!(g.label_at(i, j), g.label_at(m - 1 - i, m - 1 - j));
                }
            }
            assert_eq!(g.label_at(m / 2, m / 2), 0);
            assert_eq!(g.components(0), 1, "{degrees} {method:?}");
            // The empty region stays away from the border.
            assert!((0..m).all(|k| g.label_at(0, k) != 0 && g.label_at(k, 0) != 0));
            assert_eq!(g.components(1), 2);
            assert_eq!(g.components(2), 2);
            let touching = g.adjacent(0, 3);
            match (method, degrees as i32) {
                (RegionMethod::BestSubset, 90) => assert!(!touching),
                (RegionMethod::BestSubset, 60) => assert!(touching),
                _ => {}
            }
        }
    }

    #[test]
    fn region_csv() {
        let g = region_grid(&DMatrix::identity(2, 2), 1.0, RegionMethod::Lasso, 2.0, 3).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "y1,y2,label");
        assert_eq!(lines[1], "-2,-2,\"{1,2}\"");
        assert_eq!(lines[5], "0,0,{}");
    }

    #[test]
    fn covariance_df_of_linear_maps() {
        let n = 6;
        let mu = DVector::from_fn(n, |i, _| i as f64);
        let id = mc_df_covariance(|y| Ok(y.clone()), &mu, 0.7, 4000, 1).unwrap();
        assert!((id.mean - n as f64).abs() < 3.0 * id.se, "{id:?}");
        let x = random_matrix(n, 2, 7);
        let proj = make_projection(&x, &[0, 1]);
        let est = mc_df_covariance(|y| Ok(proj.apply(y.as_slice())), &mu, 1.3, 4000, 2).unwrap();
        assert!((est.mean - 2.0).abs() < 3.0 * est.se, "{est:?}");
        assert!(mc_df_covariance(|y| Ok(y.clone()), &mu, 1.0, 1, 0).is_err());
    }

    #[test]
    fn covariance_df_of_hard_threshold() {
        let mu = DVector::zeros(1);
        let est = mc_df_covariance(
            |y| Ok(y.map(|v| if v.abs() > 1.0 { v } else { 0.0 })),
            &mu,
            1.0,
            20_000,
            3,
        )
        .unwrap();
        let exact = 2.0 * normal_pdf(1.0) + 2.0 * crate::stats::normal_cdf(-1.0);
        assert_abs_diff_eq!(exact, 0.80126, epsilon = 1e-5);
        assert!((est.mean - exact).abs() < 3.0 * est.se, "{est:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn matches_brute_force(seed in 0u64..1000, p in 1usize..6, lambda in 0.01f64..3.0) {
            let x = random_matrix(6, p, seed);
            let y = random_matrix(6, 1, seed + 7).column(0).clone_owned() * 2.0;
            let sol = solve_best_subset(&x, &y, lambda).unwrap();
            let (set, obj) = brute_force(&x, &y, lambda);
            prop_assert_eq!(&sol.best_set, &set);
            prop_assert!((sol.objective + 0.5 * y.norm_squared() - obj).abs() < 1e-9);
            let fit_rss = 0.5 * (&y - &sol.fitted).norm_squared();
            prop_assert!((fit_rss + lambda * set.len() as f64 - obj).abs() < 1e-9);
        }

        #[test]
        fn scaling_law(seed in 0u64..1000, lambda in 0.05f64..20.0) {
            let x = random_matrix(7, 5, seed);
            let y = random_matrix(7, 1, seed + 1).column(0).clone_owned() * 1.5;
            let check = check_subset_scaling(&x, &y, lambda).unwrap();
            prop_assert!(check.holds, "{:?}", check);
        }
    }
}
