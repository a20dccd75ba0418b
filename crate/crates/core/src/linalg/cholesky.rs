use crate::error::{invalid, Error, Result};
use crate::linalg::matrix::{dim_mismatch, Matrix};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor `L` with `A = L L^t`.
///
/// A pivot at or below `n * eps * max(diag)` is reported as a failure, so
/// numerically singular systems are rejected rather than solved with garbage.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    if !a.is_square() {
        return invalid(format!("cholesky: matrix is {}x{}, not square", a.rows(), a.cols()));
    }
    let n = a.rows();
    let max_diag = (0..n).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
    let floor = T::from_count(n.max(1)) * T::epsilon() * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut s = a[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !(s > floor) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = s.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn forward_solve<T: Scalar>(l: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if l.rows() != b.rows() || !l.is_square() {
        return Err(dim_mismatch("forward_solve", l.shape(), b.shape()));
    }
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Solves `L^t X = B` for lower-triangular `L`.
pub fn backward_solve_t<T: Scalar>(l: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if l.rows() != b.rows() || !l.is_square() {
        return Err(dim_mismatch("backward_solve_t", l.shape(), b.shape()));
    }
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// Solves `A X = B` for symmetric positive definite `A`.
pub fn spd_solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let l = cholesky(a)?;
    backward_solve_t(&l, &forward_solve(&l, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    #[test]
    fn factor_and_solve() {
        let a = M::from_rows(&[&[4.0, 2.0, 0.4], &[2.0, 5.0, 1.0], &[0.4, 1.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        assert!(l.matmul_t(&l).unwrap().max_abs_diff(&a) < 1e-14);
        let b = M::from_rows(&[&[1.0], &[-2.0], &[0.5]]);
        let x = spd_solve(&a, &b).unwrap();
        assert!(a.matmul(&x).unwrap().max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn reports_failing_pivot() {
        let a = M::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]]);
        assert_eq!(cholesky(&a), Err(Error::NotPositiveDefinite { pivot: 2 }));
        let neg = M::from_rows(&[&[-1.0]]);
        assert_eq!(cholesky(&neg), Err(Error::NotPositiveDefinite { pivot: 0 }));
    }
}
