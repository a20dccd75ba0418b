//! Joint feature/label embeddings.
//!
//! Both the linear and the kernel optimizer maximize
//! `tr[V^t (beta * F F^t + Y Y^t) V]` subject to orthonormal `V`, where `F`
//! is the centered embedded feature matrix (`Xc P` or `Qc R`). The shared
//! alternation lives here; the feature-side step is supplied by each variant.

pub mod cmll;
pub mod kernel;

pub use cmll::{
    decoder_w, encode_features, fit_cmll, fit_cmll_with_init, fit_cmll_y, fit_dependence_only,
    fit_mddm, fit_recovery_only, objective_gamma, CmllModel, CmllParams, EmbeddingKind,
};
pub use kernel::{
    fit_kcmll, fit_kcmll_with_ridge, kernel_matrix, kernel_project, resolve_gamma_median, GammaSpec, KcmllModel,
    KernelKind, KernelSpec,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{fix_signs, orthonormalize_columns, sym_eig, sym_eig_topk, EigPairs, Matrix};
use crate::scalar::Scalar;

/// Objective value and relative change recorded after each sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord<T> {
    pub gamma: T,
    pub delta: T,
}

/// Guard for the relative-change denominator.
const DELTA_FLOOR: f64 = 1e-12;

/// Top-`k` eigenpairs of `G G^t` computed from the factor `G` (n x c).
///
/// When `c < n` the eigenproblem is solved on the small Gram matrix `G^t G`
/// and mapped back through `G`; directions beyond the numerical rank of `G`
/// are completed deterministically with an orthonormal basis of the null
/// space (eigenvalue 0).
pub(crate) fn gram_top_eigvecs<T: Scalar>(g: &Matrix<T>, k: usize) -> Result<EigPairs<T>> {
    let (n, c) = g.shape();
    if c >= n {
        let a = g.matmul_t(g)?;
        return sym_eig_topk(&a, k);
    }
    let small = sym_eig(&g.t_matmul(g)?)?;
    let top = small.values[0].max(T::zero());
    let cutoff = top * T::from_count(c) * T::epsilon();
    let mut vectors = Matrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for i in 0..k {
        if i < c && small.values[i] > cutoff {
            let sigma = small.values[i];
            let inv = T::one() / sigma.sqrt();
            let u = small.vectors.column(i);
            for r in 0..n {
                let mut s = T::zero();
                for (a, &b) in g.row(r).iter().zip(&u) {
                    s += *a * b;
                }
                vectors[(r, i)] = s * inv;
            }
            values.push(sigma);
        } else {
            // zero column: orthonormalize_columns fills it from the complement
            values.push(T::zero());
        }
    }
    orthonormalize_columns(&mut vectors);
    fix_signs(&mut vectors);
    Ok(EigPairs { values, vectors })
}

/// Label-side step: top-`m` eigenvectors of `beta F F^t + w Y Y^t`, realized
/// through the factor `[sqrt(beta) F, sqrt(w) Y]`.
pub(crate) fn label_step<T: Scalar>(
    f: &Matrix<T>,
    y: &Matrix<T>,
    beta: T,
    recovery_weight: T,
    m: usize,
) -> Result<Matrix<T>> {
    let g = match (beta > T::zero(), recovery_weight > T::zero()) {
        (true, true) => f.scale(beta.sqrt()).hstack(&y.scale(recovery_weight.sqrt()))?,
        (true, false) => f.scale(beta.sqrt()),
        (false, true) => y.scale(recovery_weight.sqrt()),
        (false, false) => Matrix::zeros(f.rows(), 1),
    };
    Ok(gram_top_eigvecs(&g, m)?.vectors)
}

/// `beta ||F^t V||_F^2 + w ||Y^t V||_F^2`
pub(crate) fn weighted_gamma<T: Scalar>(
    f: &Matrix<T>,
    v: &Matrix<T>,
    y: &Matrix<T>,
    beta: T,
    recovery_weight: T,
) -> Result<T> {
    let dep = f.t_matmul(v)?.frobenius_sq();
    let rec = y.t_matmul(v)?.frobenius_sq();
    Ok(beta * dep + recovery_weight * rec)
}

pub(crate) struct AlternationResult<T, S> {
    pub state: S,
    pub v: Matrix<T>,
    pub trace: Vec<IterationRecord<T>>,
}

pub(crate) struct AlternationSettings<T> {
    pub beta: T,
    pub recovery_weight: T,
    pub m: usize,
    pub maxc: usize,
    pub tol: T,
}

/// Coordinate ascent: V from the current feature state, then the feature
/// state from the new V. Each sweep records `(gamma, delta)`; the first
/// delta is measured against the half-step value `gamma(V1, S0)`.
pub(crate) fn alternate<T: Scalar, S>(
    init: S,
    y: &Matrix<T>,
    settings: &AlternationSettings<T>,
    embed: impl Fn(&S) -> Result<Matrix<T>>,
    update: impl Fn(&Matrix<T>) -> Result<S>,
) -> Result<AlternationResult<T, S>> {
    let AlternationSettings { beta, recovery_weight, m, maxc, tol } = *settings;
    let mut state = init;
    let mut f = embed(&state)?;
    let mut v = label_step(&f, y, beta, recovery_weight, m)?;
    let mut prev = weighted_gamma(&f, &v, y, beta, recovery_weight)?;
    let mut trace = Vec::new();
    for sweep in 0..maxc {
        if sweep > 0 {
            v = label_step(&f, y, beta, recovery_weight, m)?;
        }
        state = update(&v)?;
        f = embed(&state)?;
        let gamma = weighted_gamma(&f, &v, y, beta, recovery_weight)?;
        let delta = (gamma - prev).abs() / prev.abs().max(T::c(DELTA_FLOOR));
        trace.push(IterationRecord { gamma, delta });
        log::trace!("sweep {sweep}: gamma {gamma} delta {delta}");
        prev = gamma;
        if delta < tol {
            break;
        }
    }
    Ok(AlternationResult { state, v, trace })
}

/// Seeded standard-normal `rows x cols` matrix with orthonormalized columns.
pub fn random_orthonormal<T: Scalar>(rows: usize, cols: usize, seed: u64) -> Matrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Matrix::from_fn(rows, cols, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        T::c(z)
    });
    orthonormalize_columns(&mut m);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Matrix<f64>;

    #[test]
    fn gram_path_matches_explicit() {
        let g = M::from_fn(12, 4, |i, j| ((i * 5 + j * 3) % 7) as f64 - 2.5 + 0.1 * j as f64);
        let fast = gram_top_eigvecs(&g, 3).unwrap();
        let slow = sym_eig_topk(&g.matmul_t(&g).unwrap(), 3).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).abs() < 1e-10 * slow.values[0]);
        }
        assert!(crate::linalg::subspace_distance(&slow.vectors, &fast.vectors) < 1e-8);
    }

    #[test]
    fn gram_path_completes_null_space() {
        let g = M::from_fn(6, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let e = gram_top_eigvecs(&g, 4).unwrap();
        assert_eq!(e.values[2], 0.0);
        assert!(e.vectors.orthonormality_error() < 1e-14);
    }

    #[test]
    fn random_orthonormal_is_seeded() {
        let a: M = random_orthonormal(7, 3, 5);
        assert!(a.orthonormality_error() < 1e-14);
        assert_eq!(a, random_orthonormal(7, 3, 5));
        assert_ne!(a, random_orthonormal(7, 3, 6));
    }
}
