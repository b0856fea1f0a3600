use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use super::LinalgError;
use crate::math;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(LinalgError::DimensionMismatch { expected: ncols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols: ncols, data })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
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
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        math::max_abs(&self.data)
    }

    /// `self · other`, skipping zero entries of `self` (design matrices are
    /// mostly one-hot even though they are stored densely).
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        let n = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, found: other.rows });
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        let n = other.cols;
        for k in 0..self.rows {
            let b_row = &other.data[k * n..(k + 1) * n];
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows).map(|i| math::dot(self.row(i), v)).collect())
    }

    /// `selfᵀ · v`.
    pub fn t_matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, found: v.len() });
        }
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            if *vi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += vi * a;
            }
        }
        Ok(out)
    }

    /// `selfᵀ · diag(w) · self`, the likelihood precision pulled back through a design.
    pub fn weighted_gram(&self, w: &[f64]) -> Result<DenseSymmetric, LinalgError> {
        if w.len() != self.rows {
            return Err(LinalgError::DimensionMismatch { expected: self.rows, found: w.len() });
        }
        let s = self.cols;
        let mut out = Matrix::zeros(s, s);
        let mut nz: Vec<(usize, f64)> = Vec::with_capacity(s);
        for (k, wk) in w.iter().enumerate() {
            nz.clear();
            nz.extend(self.row(k).iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, a)| (j, *a)));
            for &(i, ai) in &nz {
                let f = wk * ai;
                let row = &mut out.data[i * s..(i + 1) * s];
                for &(j, aj) in &nz {
                    row[j] += f * aj;
                }
            }
        }
        Ok(DenseSymmetric(out))
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        let mut out = self.clone();
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        out.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    /// Largest elementwise absolute difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| f64::max(m, math::abs(a - b)))
    }

    /// `(A + Aᵀ)/2`, for products that are symmetric in exact arithmetic.
    pub fn symmetrized(mut self) -> DenseSymmetric {
        assert_eq!(self.rows, self.cols, "symmetrize needs a square matrix");
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
        DenseSymmetric(self)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square symmetric matrix with finite entries.
///
/// Symmetry is checked on construction to 1e-12 relative to the largest
/// entry; internal producers that are symmetric in exact arithmetic go
/// through [`Matrix::symmetrized`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric(Matrix);

pub const SYMMETRY_TOL: f64 = 1e-12;

impl DenseSymmetric {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        Self::from_matrix(Matrix::from_row_major(n, n, data)?)
    }

    pub fn from_matrix(m: Matrix) -> Result<Self, LinalgError> {
        if m.rows != m.cols {
            return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
        }
        if !m.is_finite() {
            return Err(LinalgError::NonFiniteInput);
        }
        let n = m.rows;
        let scale = f64::max(m.max_abs(), f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = math::abs(m[(i, j)] - m[(j, i)]);
                if gap > SYMMETRY_TOL * scale {
                    return Err(LinalgError::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
        Ok(m.symmetrized())
    }

    pub fn zeros(n: usize) -> Self {
        DenseSymmetric(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        DenseSymmetric(Matrix::identity(n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        DenseSymmetric(Matrix::from_diagonal(diag))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut m = self.0.clone();
        m.scale(c);
        DenseSymmetric(m)
    }

    pub fn add(&self, other: &DenseSymmetric) -> Result<Self, LinalgError> {
        let mut m = self.0.clone();
        m.add_assign(&other.0)?;
        Ok(DenseSymmetric(m))
    }

    pub fn add_diagonal(&self, c: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.rows {
            m[(i, i)] += c;
        }
        DenseSymmetric(m)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        self.0.matvec(v)
    }

    /// `vᵀ M v`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64, LinalgError> {
        Ok(math::dot(v, &self.0.matvec(v)?))
    }

    pub fn max_abs_diff(&self, other: &DenseSymmetric) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    /// Count of entries that are exactly nonzero.
    pub fn structural_nonzeros(&self) -> usize {
        self.0.data.iter().filter(|v| **v != 0.0).count()
    }
}

impl Index<(usize, usize)> for DenseSymmetric {
    type Output = f64;
    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}
