//! Orthogonal projections onto column spaces `col(X_A)` and the lasso-OLS
//! refit along a path.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::lasso::LassoPath;

/// Relative tolerance for declaring a pivot numerically zero.
pub const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of `col(X_A)` with the triangular factor needed to
/// recover basic least-squares coefficients.
#[derive(Debug, Clone)]
pub struct Projection {
    n: usize,
    /// Column-major `n x rank` orthonormal basis.
    basis: Vec<f64>,
    /// Columns of the upper triangular factor; `r_cols[k]` has `k + 1` entries.
    r_cols: Vec<Vec<f64>>,
    /// Columns of `X` carrying the basis, in basis order.
    independent: Vec<usize>,
    source_set: Vec<usize>,
    /// Largest pivot magnitude seen; the rank tolerance scales with it.
    scale: f64,
}

impl Projection {
    pub fn empty(n: usize) -> Self {
        Projection {
            n,
            basis: Vec::new(),
            r_cols: Vec::new(),
            independent: Vec::new(),
            source_set: Vec::new(),
            scale: 0.0,
        }
    }

    pub fn rank(&self) -> usize {
        self.independent.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn source_set(&self) -> &[usize] {
        &self.source_set
    }

    /// Columns of `X` whose span was kept (the pivoted independent subset).
    pub fn independent_columns(&self) -> &[usize] {
        &self.independent
    }

    fn basis_col(&self, k: usize) -> &[f64] {
        &self.basis[k * self.n..(k + 1) * self.n]
    }

    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.n, self.rank(), &self.basis)
    }

    /// `Q' y`.
    pub fn coordinates(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rank())
            .map(|k| dot(self.basis_col(k), y))
            .collect()
    }

    /// `Pi y`.
    pub fn apply(&self, y: &[f64]) -> DVector<f64> {
        let coords = self.coordinates(y);
        let mut out = DVector::zeros(self.n);
        for (k, c) in coords.iter().enumerate() {
            axpy(*c, self.basis_col(k), out.as_mut_slice());
        }
        out
    }

    /// `||Pi y||^2`.
    pub fn projected_norm_sq(&self, y: &[f64]) -> f64 {
        self.coordinates(y).iter().map(|c| c * c).sum()
    }

    /// Basic least-squares solution: coefficients on the independent columns,
    /// zero on the dependent ones. Returned as `(column, value)` pairs.
    pub fn coefficients(&self, y: &[f64]) -> Vec<(usize, f64)> {
        let mut rhs = self.coordinates(y);
        let r = self.rank();
        // Back substitution with R stored by columns.
        for k in (0..r).rev() {
            let v = rhs[k] / self.r_cols[k][k];
            rhs[k] = v;
            for i in 0..k {
                rhs[i] -= self.r_cols[k][i] * v;
            }
        }
        self.independent.iter().copied().zip(rhs).collect()
    }

    /// Adds column `j` of `x` to the spanned set by two rounds of
    /// Gram-Schmidt. A column whose orthogonal remainder falls below the
    /// rank tolerance only joins the source set.
    pub fn extend(&mut self, x: &DMatrix<f64>, j: usize) {
        let col = x.column(j);
        let mut v: Vec<f64> = col.iter().copied().collect();
        let col_norm = norm(&v);
        self.scale = self.scale.max(col_norm);
        let mut r = vec![0.0; self.rank()];
        for _ in 0..2 {
            for k in 0..self.rank() {
                let c = dot(self.basis_col(k), &v);
                r[k] += c;
                let q = &self.basis[k * self.n..(k + 1) * self.n];
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
        }
        let rho = norm(&v);
        insert_sorted(&mut self.source_set, j);
        if rho <= RANK_TOL * self.scale || rho == 0.0 {
            return;
        }
        for vi in v.iter_mut() {
            *vi /= rho;
        }
        self.basis.extend_from_slice(&v);
        r.push(rho);
        self.r_cols.push(r);
        self.independent.push(j);
    }
}

impl Projection {
    /// Removes column `j` from the spanned set. An independent column is
    /// deleted from the factorization with Givens rotations; previously
    /// dependent columns are then offered to the basis again.
    pub fn remove(&mut self, x: &DMatrix<f64>, j: usize) {
        let Ok(at) = self.source_set.binary_search(&j) else {
            return;
        };
        self.source_set.remove(at);
        let Some(pos) = self.independent.iter().position(|&c| c == j) else {
            return;
        };
        let n = self.n;
        let k = self.rank();
        self.independent.remove(pos);
        self.r_cols.remove(pos);
        // Columns pos..k-1 now carry one subdiagonal entry each.
        for t in pos..k - 1 {
            let a = self.r_cols[t][t];
            let b = self.r_cols[t][t + 1];
            let r = a.hypot(b);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
            for u in t..k - 1 {
                let col = &mut self.r_cols[u];
                let (top, bottom) = (col[t], col[t + 1]);
                col[t] = c * top + s * bottom;
                col[t + 1] = -s * top + c * bottom;
            }
            self.r_cols[t].truncate(t + 1);
            let (left, right) = self.basis.split_at_mut((t + 1) * n);
            let qt = &mut left[t * n..];
            let qn = &mut right[..n];
            for (a, b) in qt.iter_mut().zip(qn.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = c * u + s * v;
                *b = -s * u + c * v;
            }
        }
        self.basis.truncate((k - 1) * n);
        let dependent: Vec<usize> = self
            .source_set
            .iter()
            .copied()
            .filter(|c| !self.independent.contains(c))
            .collect();
        for c in dependent {
            self.source_set.retain(|&s| s != c);
            self.extend(x, c);
        }
    }
}

fn insert_sorted(set: &mut Vec<usize>, j: usize) {
    if let Err(pos) = set.binary_search(&j) {
        set.insert(pos, j);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Rank-revealing QR of `X_A` with column pivoting, computed by modified
/// Gram-Schmidt with one reorthogonalization of every pivot. Stops once the
/// largest remaining column norm drops below `RANK_TOL` times the first pivot.
pub fn make_projection(x: &DMatrix<f64>, active: &[usize]) -> Projection {
    let n = x.nrows();
    let mut set: Vec<usize> = active.to_vec();
    set.sort_unstable();
    set.dedup();
    let k = set.len();
    let mut proj = Projection::empty(n);
    proj.source_set = set.clone();
    if k == 0 {
        return proj;
    }

    let mut work: Vec<Vec<f64>> = set
        .iter()
        .map(|&j| x.column(j).iter().copied().collect())
        .collect();
    let mut order = set;
    // r_partial[c] accumulates R entries of remaining column c.
    let mut r_partial: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut first_pivot = 0.0;
    for step in 0..n.min(k) {
        let (best, best_norm) = (step..k)
            .map(|c| (c, norm(&work[c])))
            .fold((step, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if step == 0 {
            first_pivot = best_norm;
        }
        if best_norm <= RANK_TOL * first_pivot || best_norm == 0.0 {
            break;
        }
        work.swap(step, best);
        order.swap(step, best);
        r_partial.swap(step, best);

        let mut q = std::mem::take(&mut work[step]);
        let mut r = std::mem::take(&mut r_partial[step]);
        // Second pass against the existing basis.
        for (i, ri) in r.iter_mut().enumerate() {
            let c = dot(&proj.basis[i * n..(i + 1) * n], &q);
            *ri += c;
            let b = &proj.basis[i * n..(i + 1) * n];
            for (qv, bv) in q.iter_mut().zip(b) {
                *qv -= c * bv;
            }
        }
        let rho = norm(&q);
        if rho <= RANK_TOL * first_pivot || rho == 0.0 {
            break;
        }
        for v in q.iter_mut() {
            *v /= rho;
        }
        r.push(rho);
        for c in (step + 1)..k {
            let coef = dot(&q, &work[c]);
            if coef != 0.0 {
                for (wv, qv) in work[c].iter_mut().zip(&q) {
                    *wv -= coef * qv;
                }
            }
            r_partial[c].push(coef);
        }
        proj.basis.extend_from_slice(&q);
        proj.r_cols.push(r);
        proj.independent.push(order[step]);
    }
    proj.scale = first_pivot;
    proj
}

/// Rank of `X_A` from the pivoted QR.
pub fn column_rank(x: &DMatrix<f64>, active: &[usize]) -> usize {
    make_projection(x, active).rank()
}

/// Projections for every grid point of a path. Consecutive grid points with
/// the same active set share one factorization; otherwise the previous
/// factorization is updated column by column.
pub fn path_projections(x: &DMatrix<f64>, path: &LassoPath) -> Vec<Arc<Projection>> {
    let mut out: Vec<Arc<Projection>> = Vec::with_capacity(path.len());
    let mut current = Arc::new(Projection::empty(x.nrows()));
    for set in &path.active_sets {
        if current.source_set() != set.as_slice() {
            let mut next = (*current).clone();
            update_to(&mut next, x, set);
            current = Arc::new(next);
        }
        out.push(Arc::clone(&current));
    }
    out
}

/// Moves `proj` to span `col(X_set)`.
pub fn update_to(proj: &mut Projection, x: &DMatrix<f64>, set: &[usize]) {
    let leaving: Vec<usize> = proj
        .source_set()
        .iter()
        .copied()
        .filter(|j| set.binary_search(j).is_err())
        .collect();
    if leaving.len() * 2 > proj.rank().max(1) {
        *proj = make_projection(x, set);
        return;
    }
    for j in leaving {
        proj.remove(x, j);
    }
    for &j in set {
        if proj.source_set().binary_search(&j).is_err() {
            proj.extend(x, j);
        }
    }
}

/// Lasso-OLS fitted vectors `Pi_{S^lambda} y` for every grid point.
pub fn lasso_ols_fit(y: &DVector<f64>, path: &LassoPath) -> Vec<DVector<f64>> {
    path.projections
        .iter()
        .map(|p| p.apply(y.as_slice()))
        .collect()
}

/// Risk of the OLS refit on the true support, `sigma^2 * rank(X_A)`.
pub fn oracle_ols_risk(x: &DMatrix<f64>, beta: &DVector<f64>, sigma: f64) -> f64 {
    let support: Vec<usize> = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect();
    sigma * sigma * column_rank(x, &support) as f64
}
