use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::par;

/// Dense real matrix stored row-major.
///
/// Public constructors reject empty shapes and non-finite entries. Arithmetic
/// helpers do not re-check; use [`Matrix::is_finite`] where divergence is
/// possible.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::BufferLength {
                len: data.len(),
                rows,
                cols,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
                value: data[pos],
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::shape(
                    "from_rows",
                    format!("{c} columns"),
                    format!("row {i} has {}", row.len()),
                ));
            }
            data.extend_from_slice(row);
        }
        Matrix::new(r, c, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix::new(rows, cols, data)
    }

    /// Build from columns of equal length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|col| col.len() != r) {
            return Err(Error::shape("from_columns", format!("{r} rows"), "ragged columns"));
        }
        Matrix::from_fn(r, c, |i, j| columns[j][i])
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::from_raw(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Matrix::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Matrix::from_raw(self.cols, self.rows, out)
    }

    fn check_same_shape(&self, other: &Matrix, context: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                context,
                format!("{}x{}", self.rows, self.cols),
                format!("{}x{}", other.rows, other.cols),
            ));
        }
        Ok(())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::shape(
                "matmul",
                format!("{} rows on the right", self.cols),
                other.rows,
            ));
        }
        let (n, p) = (self.cols, other.cols);
        let mut out = Matrix::zeros(self.rows, p);
        par::for_each_row(&mut out.data, p, |i, dst| {
            let lhs = &self.data[i * n..(i + 1) * n];
            for (k, &a) in lhs.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rhs = &other.data[k * p..(k + 1) * p];
                for (d, &b) in dst.iter_mut().zip(rhs) {
                    *d += a * b;
                }
            }
        });
        Ok(out)
    }

    /// `selfᵀ * other`.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::shape("t_matmul", format!("{} rows", self.rows), other.rows));
        }
        self.transpose().matmul(other)
    }

    /// `self * otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::shape("matmul_t", format!("{} columns", self.cols), other.cols));
        }
        let k = self.cols;
        let p = other.rows;
        let mut out = Matrix::zeros(self.rows, p);
        par::for_each_row(&mut out.data, p, |i, dst| {
            let a = &self.data[i * k..(i + 1) * k];
            for (j, d) in dst.iter_mut().enumerate() {
                let b = &other.data[j * k..(j + 1) * k];
                *d = dot(a, b);
            }
        });
        Ok(out)
    }

    /// Gram matrix `selfᵀ self`.
    pub fn gram(&self) -> Matrix {
        let t = self.transpose();
        t.matmul_t(&t).expect("shapes agree by construction")
    }

    /// Outer Gram matrix `self selfᵀ`.
    pub fn outer_gram(&self) -> Matrix {
        self.matmul_t(self).expect("shapes agree by construction")
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_map(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_map(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_map(other, "hadamard", |a, b| a * b)
    }

    pub fn zip_map(&self, other: &Matrix, context: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        self.check_same_shape(other, context)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix::from_raw(self.rows, self.cols, data))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Send + Sync) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, par::map_slice(&self.data, f))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    /// `self += s * other`
    pub(crate) fn axpy(&mut self, s: f64, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Entrywise l1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn set_diagonal(&mut self, value: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.cols + i] = value;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sq.iter_mut().zip(self.row(i)) {
                *s += v * v;
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// Scale every nonzero column to unit Euclidean length; zero columns are left alone.
    pub fn normalize_columns(&self) -> Matrix {
        let norms = self.column_norms();
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, v) in out.data[i * self.cols..(i + 1) * self.cols].iter_mut().enumerate() {
                if norms[j] > 0.0 {
                    *v /= norms[j];
                }
            }
        }
        out
    }

    pub fn select_columns(&self, indices: &[usize]) -> Result<Matrix> {
        if indices.is_empty() {
            return Err(Error::EmptyMatrix {
                rows: self.rows,
                cols: 0,
            });
        }
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.cols) {
            return Err(Error::invalid(
                "indices",
                format!("column {bad} out of range {}", self.cols),
            ));
        }
        Ok(Matrix::from_raw(
            self.rows,
            indices.len(),
            (0..self.rows)
                .flat_map(|i| indices.iter().map(move |&j| (i, j)))
                .map(|(i, j)| self.data[i * self.cols + j])
                .collect(),
        ))
    }

    pub fn select_rows_cols(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_raw(
            rows.len(),
            cols.len(),
            rows.iter()
                .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
                .map(|(i, j)| self.data[i * self.cols + j])
                .collect(),
        )
    }

    /// Largest entrywise difference between `self` and its transpose.
    pub fn asymmetry(&self) -> Option<(usize, usize, f64)> {
        if !self.is_square() {
            return None;
        }
        let mut worst = (0, 0, 0.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > worst.2 {
                    worst = (i, j, gap);
                }
            }
        }
        Some(worst)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(12) {
            write!(f, "  ")?;
            for v in self.row(i).iter().take(12) {
                write!(f, "{v:>10.4} ")?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A list of matrices sharing a column count.
///
/// Holds the per-modality data `X(t)` as well as coefficient stacks, where
/// every layer is `n x n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixStack {
    layers: Vec<Matrix>,
}

impl MatrixStack {
    pub fn new(layers: Vec<Matrix>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::invalid("layers", "a stack needs at least one layer"))?;
        let n = first.cols();
        for (t, layer) in layers.iter().enumerate() {
            if layer.cols() != n {
                return Err(Error::shape(
                    "MatrixStack",
                    format!("{n} columns"),
                    format!("layer {t} has {}", layer.cols()),
                ));
            }
        }
        Ok(MatrixStack { layers })
    }

    /// Like [`MatrixStack::new`] but also requires every layer to be `n x n`.
    pub fn square(layers: Vec<Matrix>) -> Result<Self> {
        let stack = MatrixStack::new(layers)?;
        for (t, layer) in stack.layers.iter().enumerate() {
            if !layer.is_square() {
                return Err(Error::shape(
                    "coefficient stack",
                    "square layers",
                    format!("layer {t} is {}x{}", layer.rows(), layer.cols()),
                ));
            }
        }
        Ok(stack)
    }

    /// Number of layers `T`.
    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Shared column count `n`.
    pub fn n(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn layers(&self) -> &[Matrix] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Matrix> {
        self.layers
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Matrix> {
        self.layers.iter()
    }

    pub fn max_rows(&self) -> usize {
        self.layers.iter().map(Matrix::rows).max().unwrap_or(0)
    }

    pub fn normalize_columns(&self) -> MatrixStack {
        MatrixStack {
            layers: self.layers.iter().map(Matrix::normalize_columns).collect(),
        }
    }

    pub fn select_columns(&self, indices: &[usize]) -> Result<MatrixStack> {
        Ok(MatrixStack {
            layers: self
                .layers
                .iter()
                .map(|l| l.select_columns(indices))
                .collect::<Result<_>>()?,
        })
    }
}

impl Index<usize> for MatrixStack {
    type Output = Matrix;

    fn index(&self, t: usize) -> &Matrix {
        &self.layers[t]
    }
}

/// Per-modality data matrices `X(t)`, columns are observations.
pub type ModalityStack = MatrixStack;
