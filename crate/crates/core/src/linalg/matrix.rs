use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite entry at ({}, {})", pos / cols.max(1), pos % cols.max(1)));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Convenience constructor for literals; panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().map(|&v| T::c(v)));
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Selects the given rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Leading `k` columns.
    pub fn first_cols(&self, k: usize) -> Self {
        Self::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `self * rhs`
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(dim_mismatch("matmul", self.shape(), rhs.shape()));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                for (o, &b) in orow.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^t * rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(dim_mismatch("t_matmul", self.shape(), rhs.shape()));
        }
        let mut out = Self::zeros(self.cols, rhs.cols);
        let n = rhs.cols;
        for k in 0..self.rows {
            let brow = rhs.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * rhs^t`
    pub fn matmul_t(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(dim_mismatch("matmul_t", self.shape(), rhs.shape()));
        }
        Ok(Self::from_fn(self.rows, rhs.rows, |i, j| dot(self.row(i), rhs.row(j))))
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(dim_mismatch("elementwise", self.shape(), rhs.shape()));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    /// Horizontal concatenation `[self, rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(dim_mismatch("hstack", self.shape(), rhs.shape()));
        }
        let c = self.cols + rhs.cols;
        let mut data = Vec::with_capacity(self.rows * c);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(rhs.row(i));
        }
        Ok(Matrix { rows: self.rows, cols: c, data })
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_sq().sqrt()
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `max |self^t self - I|`, used for orthonormality checks.
    pub fn orthonormality_error(&self) -> T {
        let g = self.t_matmul(self).expect("square gram");
        let mut worst = T::zero();
        for i in 0..g.rows {
            for j in 0..g.cols {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Converts to another scalar type through `f64`.
    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| U::c(v.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn dim_mismatch(op: &str, a: (usize, usize), b: (usize, usize)) -> Error {
    Error::InvalidInput(format!(
        "{op}: dimension mismatch {}x{} vs {}x{}",
        a.0, a.1, b.0, b.1
    ))
}

/// Subtracts column means: the product `H M` with `H = I - ee^t/N`, without forming `H`.
pub fn center_columns<T: Scalar>(m: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>)> {
    if m.rows() == 0 || m.cols() == 0 {
        return invalid("center_columns: empty matrix");
    }
    let means = column_means(m);
    Ok((subtract_row_vector(m, &means), means))
}

pub fn column_means<T: Scalar>(m: &Matrix<T>) -> Vec<T> {
    let mut sums = vec![T::zero(); m.cols()];
    for i in 0..m.rows() {
        for (s, &v) in sums.iter_mut().zip(m.row(i)) {
            *s += v;
        }
    }
    let n = T::from_count(m.rows().max(1));
    sums.into_iter().map(|s| s / n).collect()
}

/// `M - e v^t`
pub fn subtract_row_vector<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Matrix<T> {
    assert_eq!(m.cols(), v.len());
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] - v[j])
}

/// `M + e v^t`
pub fn add_row_vector<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Matrix<T> {
    assert_eq!(m.cols(), v.len());
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] + v[j])
}

/// Orthonormalizes the columns of `m` in place with twice-applied modified
/// Gram-Schmidt. Columns that collapse numerically are replaced by a
/// deterministic completion from the standard basis.
pub fn orthonormalize_columns<T: Scalar>(m: &mut Matrix<T>) {
    let (n, k) = m.shape();
    assert!(k <= n, "cannot orthonormalize {k} columns in dimension {n}");
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v = m.column(j);
        let norm0 = norm(&v);
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi -= p * bi;
                }
            }
        }
        let nv = norm(&v);
        if nv > T::c(1e-10) * norm0.max(T::min_positive_value()) && nv > T::zero() {
            v.iter_mut().for_each(|x| *x /= nv);
        } else {
            v = complete_basis_vector(&basis, n);
        }
        basis.push(v);
    }
    for (j, b) in basis.iter().enumerate() {
        m.set_column(j, b);
    }
}

/// Picks the standard basis vector with the largest residual against `basis`
/// (lowest index on ties) and returns its normalized residual.
pub(crate) fn complete_basis_vector<T: Scalar>(basis: &[Vec<T>], n: usize) -> Vec<T> {
    let mut best: Option<(T, Vec<T>)> = None;
    for i in 0..n {
        let mut v = vec![T::zero(); n];
        v[i] = T::one();
        for _ in 0..2 {
            for b in basis {
                let p = dot(&v, b);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi -= p * bi;
                }
            }
        }
        let nv = norm(&v);
        if best.as_ref().map_or(true, |(bn, _)| nv > *bn) {
            best = Some((nv, v));
        }
    }
    let (nv, mut v) = best.expect("n >= 1");
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

#[inline]
pub fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}
