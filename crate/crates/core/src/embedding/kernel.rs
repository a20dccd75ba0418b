//! Kernel matrices and the kernelized compact embedding.
//!
//! The projection is expressed as `P = Phi(X) R`, so the embedded training
//! features are `Qc R` with `Qc = H Q` and the orthonormality constraint
//! becomes `R^t Q R = I`, enforced on the jittered metric `Q + ridge I`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::embedding::cmll::{decoder_w, CmllParams};
use crate::embedding::{alternate, random_orthonormal, AlternationSettings, IterationRecord};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    backward_solve_t, cholesky, column_means, default_ridge, gen_sym_eig_topk,
    subtract_row_vector, Matrix,
};
use crate::scalar::Scalar;

/// Rows sampled when estimating the median pairwise distance.
const MEDIAN_SAMPLE_ROWS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaSpec<T> {
    Value(T),
    /// Resolved from the training data before use.
    Median,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub kind: KernelKind,
    pub gamma: GammaSpec<T>,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn linear() -> Self {
        KernelSpec { kind: KernelKind::Linear, gamma: GammaSpec::Value(T::one()) }
    }

    pub fn rbf(gamma: T) -> Self {
        KernelSpec { kind: KernelKind::Rbf, gamma: GammaSpec::Value(gamma) }
    }

    pub fn rbf_median() -> Self {
        KernelSpec { kind: KernelKind::Rbf, gamma: GammaSpec::Median }
    }

    /// Replaces a median-heuristic bandwidth with a concrete value.
    pub fn resolve(&self, x: &Matrix<T>, seed: u64) -> Result<Self> {
        match (self.kind, self.gamma) {
            (KernelKind::Rbf, GammaSpec::Median) => {
                Ok(KernelSpec { kind: KernelKind::Rbf, gamma: GammaSpec::Value(resolve_gamma_median(x, seed)?) })
            }
            (KernelKind::Rbf, GammaSpec::Value(g)) if !(g > T::zero()) || !g.is_finite() => {
                invalid(format!("rbf gamma must be positive, got {g}"))
            }
            (KernelKind::Linear, GammaSpec::Median) => {
                Ok(KernelSpec { kind: KernelKind::Linear, gamma: GammaSpec::Value(T::one()) })
            }
            _ => Ok(*self),
        }
    }

    pub fn gamma_value(&self) -> Option<T> {
        match self.gamma {
            GammaSpec::Value(g) => Some(g),
            GammaSpec::Median => None,
        }
    }
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// `k(a_i, b_j)` for every row pair.
pub fn kernel_matrix<T: Scalar>(spec: &KernelSpec<T>, a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols() != b.cols() {
        return invalid(format!("kernel_matrix: {} vs {} columns", a.cols(), b.cols()));
    }
    match spec.kind {
        KernelKind::Linear => a.matmul_t(b),
        KernelKind::Rbf => {
            let gamma = spec
                .gamma_value()
                .ok_or_else(|| Error::InvalidState("rbf bandwidth not resolved".into()))?;
            Ok(Matrix::from_fn(a.rows(), b.rows(), |i, j| (-gamma * sq_dist(a.row(i), b.row(j))).exp()))
        }
    }
}

/// `1 / median` of pairwise squared distances over at most 1000 seeded rows.
pub fn resolve_gamma_median<T: Scalar>(x: &Matrix<T>, seed: u64) -> Result<T> {
    let n = x.rows();
    if n < 2 {
        return invalid("median heuristic needs at least 2 rows");
    }
    let rows: Vec<usize> = if n > MEDIAN_SAMPLE_ROWS {
        let mut idx = sample(&mut ChaCha8Rng::seed_from_u64(seed), n, MEDIAN_SAMPLE_ROWS).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };
    let mut dists = Vec::with_capacity(rows.len() * (rows.len() - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            dists.push(sq_dist(x.row(i), x.row(j)));
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let len = dists.len();
    let median = if len % 2 == 1 {
        dists[len / 2]
    } else {
        (dists[len / 2 - 1] + dists[len / 2]) * T::c(0.5)
    };
    if !(median > T::zero()) {
        return invalid("median pairwise distance is 0 (points identical)");
    }
    Ok(T::one() / median)
}

/// Fitted kernel embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct KcmllModel<T> {
    /// Combination coefficients, `N x d`.
    pub r: Matrix<T>,
    pub v: Matrix<T>,
    pub w: Matrix<T>,
    pub x_train: Matrix<T>,
    /// Column means of the training kernel matrix (test-time centering).
    pub kernel_means: Vec<T>,
    /// Resolved kernel.
    pub spec: KernelSpec<T>,
    /// Jitter added to the metric `Q`.
    pub ridge: T,
    pub params: CmllParams<T>,
    pub trace: Vec<IterationRecord<T>>,
}

impl<T: Scalar> KcmllModel<T> {
    pub fn final_gamma(&self) -> T {
        self.trace.last().map_or(T::zero(), |r| r.gamma)
    }

    /// `Q + ridge I` on the stored training data.
    pub fn metric(&self) -> Result<Matrix<T>> {
        let mut q = kernel_matrix(&self.spec, &self.x_train, &self.x_train)?;
        for i in 0..q.rows() {
            q[(i, i)] += self.ridge;
        }
        Ok(q)
    }
}

pub fn fit_kcmll<T: Scalar>(
    data: &Dataset<T>,
    spec: &KernelSpec<T>,
    params: &CmllParams<T>,
) -> Result<KcmllModel<T>> {
    fit_kcmll_with_ridge(data, spec, params, None)
}

/// [`fit_kcmll`] with an explicit metric jitter (`None` = `1e-8 trace(Q)/N`).
pub fn fit_kcmll_with_ridge<T: Scalar>(
    data: &Dataset<T>,
    spec: &KernelSpec<T>,
    params: &CmllParams<T>,
    ridge: Option<T>,
) -> Result<KcmllModel<T>> {
    let n = data.n();
    params.validate(n, n, data.m())?;
    let spec = spec.resolve(&data.x, params.seed)?;
    let q = kernel_matrix(&spec, &data.x, &data.x)?;
    let kernel_means = column_means(&q);
    let qc = subtract_row_vector(&q, &kernel_means);
    let ridge = ridge.unwrap_or_else(|| default_ridge(&q));
    if !(ridge >= T::zero()) {
        return invalid("kernel metric ridge must be non-negative");
    }

    // R0 = L^-t U0 satisfies R0^t (Q + ridge I) R0 = I for orthonormal U0.
    let mut qt = q.clone();
    for i in 0..n {
        qt[(i, i)] += ridge;
    }
    let l = cholesky(&qt)?;
    let r0 = backward_solve_t(&l, &random_orthonormal(n, params.d, params.seed))?;

    let settings = AlternationSettings {
        beta: params.beta,
        recovery_weight: T::one(),
        m: params.m,
        maxc: params.maxc,
        tol: params.tol,
    };
    let out = alternate(
        r0,
        &data.y,
        &settings,
        |r| qc.matmul(r),
        |v| {
            let e = qc.t_matmul(v)?;
            let b = e.matmul_t(&e)?;
            Ok(gen_sym_eig_topk(&b, &q, params.d, Some(ridge))?.vectors)
        },
    )?;
    let w = decoder_w(&out.v, &data.y, params.lambda)?;
    Ok(KcmllModel {
        r: out.state,
        v: out.v,
        w,
        x_train: data.x.clone(),
        kernel_means,
        spec,
        ridge,
        params: params.clone(),
        trace: out.trace,
    })
}

/// `z_i = R^t (q(X, x_i) - kernel column means)`
pub fn kernel_project<T: Scalar>(model: &KcmllModel<T>, x_new: &Matrix<T>) -> Result<Matrix<T>> {
    if x_new.cols() != model.x_train.cols() {
        return invalid(format!(
            "kernel_project: expected {} columns, got {}",
            model.x_train.cols(),
            x_new.cols()
        ));
    }
    let k = kernel_matrix(&model.spec, x_new, &model.x_train)?;
    subtract_row_vector(&k, &model.kernel_means).matmul(&model.r)
}
