//! Dense symmetric eigensolvers.
//!
//! The full decomposition is Householder tridiagonalization followed by
//! implicit QL with Wilkinson-style shifts (the EISPACK `tred2`/`tql2` pair).
//! Top-k requests truncate the full spectrum. Every returned eigenvector is
//! sign-normalized so its largest-magnitude entry (lowest index on ties) is
//! positive, which makes the output a deterministic function of the input.

use crate::error::{invalid, Error, Result};
use crate::linalg::cholesky::{backward_solve_t, cholesky, forward_solve};
use crate::linalg::matrix::Matrix;
use crate::scalar::Scalar;

/// Eigenpairs sorted by descending eigenvalue; `vectors` holds one
/// eigenvector per column.
#[derive(Clone, Debug, PartialEq)]
pub struct EigPairs<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

impl<T: Scalar> EigPairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn symmetry_tolerance<T: Scalar>() -> T {
    T::c(1e-10).max(T::c(1e3) * T::epsilon())
}

fn check_symmetric<T: Scalar>(a: &Matrix<T>, what: &str) -> Result<()> {
    if !a.is_square() {
        return invalid(format!("{what}: matrix is {}x{}, not square", a.rows(), a.cols()));
    }
    if a.rows() == 0 {
        return invalid(format!("{what}: empty matrix"));
    }
    let scale = a.max_abs();
    if a.asymmetry() > symmetry_tolerance::<T>() * scale {
        return invalid(format!("{what}: matrix is not symmetric"));
    }
    Ok(())
}

fn symmetrized<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let half = T::c(0.5);
    Matrix::from_fn(a.rows(), a.cols(), |i, j| half * (a[(i, j)] + a[(j, i)]))
}

/// Full eigendecomposition of a symmetric matrix, values descending.
pub fn sym_eig<T: Scalar>(a: &Matrix<T>) -> Result<EigPairs<T>> {
    check_symmetric(a, "sym_eig")?;
    let n = a.rows();
    let (d, z) = tridiagonal_ql(symmetrized(a))?;
    // z holds eigenvectors as rows; order by descending value, ties by index.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap().then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        vectors.set_column(col, z.row(src));
    }
    fix_signs(&mut vectors);
    Ok(EigPairs { values, vectors })
}

/// The `k` algebraically largest eigenpairs of a symmetric matrix.
pub fn sym_eig_topk<T: Scalar>(a: &Matrix<T>, k: usize) -> Result<EigPairs<T>> {
    check_symmetric(a, "sym_eig_topk")?;
    if k == 0 || k > a.rows() {
        return invalid(format!("sym_eig_topk: k = {k} outside 1..={}", a.rows()));
    }
    let full = sym_eig(a)?;
    Ok(truncate(full, k))
}

fn truncate<T: Scalar>(full: EigPairs<T>, k: usize) -> EigPairs<T> {
    EigPairs { values: full.values[..k].to_vec(), vectors: full.vectors.first_cols(k) }
}

/// Default jitter for the generalized problem: `1e-8 * trace(Q) / n`.
pub fn default_ridge<T: Scalar>(q: &Matrix<T>) -> T {
    T::c(1e-8) * q.trace() / T::from_count(q.rows().max(1))
}

/// Top-`k` solutions of `B r = theta (Q + ridge I) r`, normalized so that
/// `R^t (Q + ridge I) R = I`. With `ridge = None` the default jitter is used.
pub fn gen_sym_eig_topk<T: Scalar>(
    b: &Matrix<T>,
    q: &Matrix<T>,
    k: usize,
    ridge: Option<T>,
) -> Result<EigPairs<T>> {
    check_symmetric(b, "gen_sym_eig_topk (B)")?;
    check_symmetric(q, "gen_sym_eig_topk (Q)")?;
    if b.shape() != q.shape() {
        return invalid("gen_sym_eig_topk: B and Q differ in size");
    }
    if k == 0 || k > b.rows() {
        return invalid(format!("gen_sym_eig_topk: k = {k} outside 1..={}", b.rows()));
    }
    let ridge = ridge.unwrap_or_else(|| default_ridge(q));
    if !(ridge >= T::zero()) {
        return invalid("gen_sym_eig_topk: ridge must be non-negative");
    }
    let mut qt = symmetrized(q);
    for i in 0..qt.rows() {
        qt[(i, i)] += ridge;
    }
    let l = cholesky(&qt)?;
    // C = L^-1 B L^-t
    let lb = forward_solve(&l, &symmetrized(b))?;
    let c = forward_solve(&l, &lb.transpose())?;
    let c = symmetrized(&c);
    let whitened = sym_eig_topk(&c, k)?;
    let mut vectors = backward_solve_t(&l, &whitened.vectors)?;
    fix_signs(&mut vectors);
    Ok(EigPairs { values: whitened.values, vectors })
}

/// Flips each column so its largest-|entry| component (lowest index on ties) is positive.
pub fn fix_signs<T: Scalar>(v: &mut Matrix<T>) {
    for j in 0..v.cols() {
        let mut best = 0;
        let mut best_abs = T::neg_infinity();
        for i in 0..v.rows() {
            let a = v[(i, j)].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if v.rows() > 0 && v[(best, j)] < T::zero() {
            for i in 0..v.rows() {
                v[(i, j)] = -v[(i, j)];
            }
        }
    }
}

/// Householder tridiagonalization plus implicit QL iteration.
/// Returns unsorted eigenvalues and a matrix whose rows are the eigenvectors.
fn tridiagonal_ql<T: Scalar>(a: Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let n = a.rows();
    let mut v = a;
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(n, &mut v, &mut d, &mut e);
    // Rotations act on eigenvector columns; transpose so they act on contiguous rows.
    let mut z = v.transpose();
    tql2(n, &mut z, &mut d, &mut e)?;
    Ok((d, z))
}

fn tred2<T: Scalar>(n: usize, v: &mut Matrix<T>, d: &mut [T], e: &mut [T]) {
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }
    // Accumulate transformations.
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

fn tql2<T: Scalar>(n: usize, z: &mut Matrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let zero = T::zero();
    let one = T::one();
    let two = T::c(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;
    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    let max_iter = 60 * n.max(1);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::Numeric(format!(
                        "symmetric QL iteration did not converge for eigenvalue {l}"
                    )));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    // Rotate eigenvector rows i and i+1.
                    let (lo, hi) = z.as_rows_pair_mut(i, i + 1);
                    for (zi, zi1) in lo.iter_mut().zip(hi.iter_mut()) {
                        let hv = *zi1;
                        *zi1 = s * *zi + c * hv;
                        *zi = c * *zi - s * hv;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

impl<T: Scalar> Matrix<T> {
    /// Mutable views of rows `a < b`.
    pub(crate) fn as_rows_pair_mut(&mut self, a: usize, b: usize) -> (&mut [T], &mut [T]) {
        debug_assert!(a < b);
        let c = self.cols();
        let data = self.as_mut_slice();
        let (head, tail) = data.split_at_mut(b * c);
        (&mut head[a * c..(a + 1) * c], &mut tail[..c])
    }
}
