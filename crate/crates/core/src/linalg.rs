//! Dense linear algebra: a row-major [`Matrix`], population covariance,
//! cyclic-Jacobi symmetric eigendecomposition, Cholesky factorization,
//! Mahalanobis distance in eigencoordinates and the principal-axis
//! coordinate transform `Y = Pᵀ X`.
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        Matrix::from_vec(r.rows, r.cols, r.data)
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data,
        }
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major storage, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "Matrix::from_vec",
                expected: (rows, cols),
                got: (data.len(), 1),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "Matrix::from_rows",
                    expected: (i, m),
                    got: (i, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(n, m, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul",
                expected: (self.cols, other.cols),
                got: other.shape(),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · v` for a column vector `v`.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: (self.cols, 1),
                got: (v.len(), 1),
            });
        }
        Ok(self.row_iter().map(|r| dot(r, v)).collect())
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Entrywise `‖self − other‖_∞`; panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (i + 1..self.cols).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Per-column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.row_iter() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows.max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Selects a subset of columns, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Matrix> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.cols) {
            return Err(Error::Config(format!(
                "column index {bad} out of range for {} columns",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for r in self.row_iter() {
            data.extend(idx.iter().map(|&j| r[j]));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        })
    }

    /// Selects a subset of rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Population covariance (divisor `n`) of the rows of `data`.
pub fn covariance(data: &Matrix) -> Result<Matrix> {
    let (n, m) = data.shape();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let mean = data.column_means();
    let mut cov = Matrix::zeros(m, m);
    let mut dev = vec![0.0; m];
    for r in data.row_iter() {
        for ((d, x), mu) in dev.iter_mut().zip(r).zip(&mean) {
            *d = x - mu;
        }
        for i in 0..m {
            let di = dev[i];
            let row = &mut cov.data[i * m..(i + 1) * m];
            for j in i..m {
                row[j] += di * dev[j];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for i in 0..m {
        for j in i..m {
            let v = cov.data[i * m + j] * inv_n;
            cov.data[i * m + j] = v;
            cov.data[j * m + i] = v;
        }
    }
    Ok(cov)
}

/// Eigenvalues (non-increasing) and orthonormal eigenvectors (as columns)
/// of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// The `k`-th unit eigenvector.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `V · diag(values) · Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let m = self.dim();
        let mut out = Matrix::zeros(m, m);
        for k in 0..m {
            let lam = self.values[k];
            for i in 0..m {
                let vik = self.vectors.get(i, k) * lam;
                for j in 0..m {
                    out.data[i * m + j] += vik * self.vectors.get(j, k);
                }
            }
        }
        out
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_REL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-9;

fn off_diagonal_norm(a: &[f64], m: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                s += a[i * m + j] * a[i * m + j];
            }
        }
    }
    s.sqrt()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-12 · ‖a‖_F` (or 100 sweeps). Eigenvalues come back sorted
/// non-increasing with ties kept in their original diagonal order, and each
/// eigenvector is signed so its largest-magnitude component is positive.
pub fn sym_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    let (r, c) = a.shape();
    if r != c || r == 0 {
        return Err(Error::ContractViolation(format!(
            "sym_eigen needs a non-empty square matrix, got {r}×{c}"
        )));
    }
    if !a.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::ContractViolation(
            "sym_eigen input is not symmetric within 1e-9".into(),
        ));
    }
    let m = r;
    // symmetrize so rotations act on an exactly symmetric matrix
    let mut w = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            w[i * m + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    // rows of `vt` accumulate the eigenvectors (V transposed)
    let mut vt = Matrix::identity(m).data;
    let target = JACOBI_REL_TOL * a.frobenius();

    let mut off = off_diagonal_norm(&w, m);
    let mut sweeps = 0;
    while off > target {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NotConverged { residual: off });
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = w[p * m + q];
                if apq == 0.0 {
                    continue;
                }
                let app = w[p * m + p];
                let aqq = w[q * m + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // rows p and q of JᵀAJ; columns follow by symmetry
                let (head, tail) = w.split_at_mut(q * m);
                let row_p = &mut head[p * m..(p + 1) * m];
                let row_q = &mut tail[..m];
                for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
                    let (akp, akq) = (*x, *y);
                    *x = cs * akp - sn * akq;
                    *y = sn * akp + cs * akq;
                }
                row_p[p] = app - t * apq;
                row_q[q] = aqq + t * apq;
                row_p[q] = 0.0;
                row_q[p] = 0.0;
                for k in 0..m {
                    if k != p && k != q {
                        w[k * m + p] = w[p * m + k];
                        w[k * m + q] = w[q * m + k];
                    }
                }
                let (head, tail) = vt.split_at_mut(q * m);
                for (x, y) in head[p * m..(p + 1) * m].iter_mut().zip(tail[..m].iter_mut()) {
                    let (vkp, vkq) = (*x, *y);
                    *x = cs * vkp - sn * vkq;
                    *y = sn * vkp + cs * vkq;
                }
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&w, m);
    }

    let mut order: Vec<usize> = (0..m).collect();
    // stable: equal eigenvalues keep diagonal order
    order.sort_by(|&i, &j| w[j * m + j].total_cmp(&w[i * m + i]));

    let values: Vec<f64> = order.iter().map(|&i| w[i * m + i]).collect();
    let mut vectors = Matrix::zeros(m, m);
    for (k, &src) in order.iter().enumerate() {
        let col = &vt[src * m..(src + 1) * m];
        let mut best = 0;
        for i in 0..m {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        let sign = if col[best] < 0.0 { -1.0 } else { 1.0 };
        for (i, v) in col.iter().enumerate() {
            vectors.data[i * m + k] = sign * v;
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Lower-triangular `L` with `a = L Lᵀ`.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let (r, c) = a.shape();
    if r != c {
        return Err(Error::ContractViolation(format!(
            "cholesky needs a square matrix, got {r}×{c}"
        )));
    }
    let n = r;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 1e-12 {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Scale-relative rank threshold: `1e-10 · trace`.
pub fn rank_epsilon(eig: &SymmetricEigen) -> f64 {
    1e-10 * eig.values.iter().sum::<f64>()
}

/// Squared Mahalanobis distance `Σᵢ (ηᵢᵀ(x − mean))² / λᵢ`.
pub fn mahalanobis_sq(x: &[f64], mean: &[f64], eig: &SymmetricEigen) -> Result<f64> {
    let m = eig.dim();
    if x.len() != m || mean.len() != m {
        return Err(Error::DimensionMismatch {
            context: "mahalanobis_sq",
            expected: (m, m),
            got: (x.len(), mean.len()),
        });
    }
    let eps = rank_epsilon(eig);
    if let Some((index, &value)) = eig.values.iter().enumerate().find(|(_, &l)| l <= eps) {
        return Err(Error::SingularCovariance { index, value });
    }
    let dev: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let mut total = 0.0;
    for k in 0..m {
        let mut proj = 0.0;
        for (i, d) in dev.iter().enumerate() {
            proj += eig.vectors.get(i, k) * d;
        }
        total += proj * proj / eig.values[k];
    }
    Ok(total)
}

/// Principal-axis coordinates: row `i` of the output is `Pᵀ · xᵢ`.
pub fn pca_transform(data: &Matrix, eig: &SymmetricEigen) -> Result<Matrix> {
    if data.cols() != eig.dim() {
        return Err(Error::DimensionMismatch {
            context: "pca_transform",
            expected: (data.rows(), eig.dim()),
            got: data.shape(),
        });
    }
    data.matmul(&eig.vectors)
}

/// Inverse of [`pca_transform`]: row `i` of the output is `P · yᵢ`.
pub fn pca_inverse(coords: &Matrix, eig: &SymmetricEigen) -> Result<Matrix> {
    if coords.cols() != eig.dim() {
        return Err(Error::DimensionMismatch {
            context: "pca_inverse",
            expected: (coords.rows(), eig.dim()),
            got: coords.shape(),
        });
    }
    coords.matmul(&eig.vectors.transpose())
}
