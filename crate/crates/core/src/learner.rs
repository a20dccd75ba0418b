//! The learning step from embedded features to embedded labels, and the
//! end-to-end prediction pipeline `decode(regress(embed(x)))`.

use crate::data::Standardizer;
use crate::embedding::{encode_features, kernel_matrix, kernel_project, CmllModel, EmbeddingKind, KcmllModel, KernelSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    add_row_vector, center_columns, column_means, spd_solve, subtract_row_vector, sym_eig, Matrix,
};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegressorKind {
    Ridge,
    KernelRidge,
}

/// Fitted ridge or kernel-ridge map with centered inputs and targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Regressor<T> {
    pub kind: RegressorKind,
    /// Ridge: `d x m` primal weights. Kernel ridge: `N x m` dual coefficients.
    pub coef: Matrix<T>,
    /// Ridge: input column means. Kernel ridge: column means of the training kernel.
    pub input_means: Vec<T>,
    pub target_means: Vec<T>,
    pub rho: T,
    /// Kernel ridge only.
    pub spec: Option<KernelSpec<T>>,
    /// Kernel ridge only.
    pub u_train: Option<Matrix<T>>,
    /// Kernel ridge only: grand mean of the training kernel.
    pub kernel_mean: T,
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho >= T::zero()) || !rho.is_finite() {
        return invalid(format!("rho must be finite and non-negative, got {rho}"));
    }
    Ok(())
}

/// Solves `(Uc^t Uc + rho I) coef = Uc^t Vc`.
pub fn ridge_fit<T: Scalar>(u: &Matrix<T>, v: &Matrix<T>, rho: T) -> Result<Regressor<T>> {
    if u.rows() != v.rows() {
        return invalid(format!("ridge_fit: {} input rows vs {} target rows", u.rows(), v.rows()));
    }
    check_rho(rho)?;
    let (uc, input_means) = center_columns(u)?;
    let (vc, target_means) = center_columns(v)?;
    let mut gram = uc.t_matmul(&uc)?;
    for i in 0..gram.rows() {
        gram[(i, i)] += rho;
    }
    let coef = spd_solve(&gram, &uc.t_matmul(&vc)?).map_err(|e| match e {
        Error::NotPositiveDefinite { pivot } => Error::Numeric(format!(
            "ridge system singular at pivot {pivot} (rho = {rho}); use rho > 0"
        )),
        other => other,
    })?;
    Ok(Regressor {
        kind: RegressorKind::Ridge,
        coef,
        input_means,
        target_means,
        rho,
        spec: None,
        u_train: None,
        kernel_mean: T::zero(),
    })
}

/// Dual ridge on the doubly centered kernel: `coef = (Kc + rho I)^-1 Vc`.
///
/// At `rho = 0` a singular `Kc` falls back to the minimum-norm
/// (pseudo-inverse) solution.
pub fn kridge_fit<T: Scalar>(
    u: &Matrix<T>,
    v: &Matrix<T>,
    rho: T,
    spec: &KernelSpec<T>,
) -> Result<Regressor<T>> {
    if u.rows() != v.rows() {
        return invalid(format!("kridge_fit: {} input rows vs {} target rows", u.rows(), v.rows()));
    }
    check_rho(rho)?;
    let spec = spec.resolve(u, 0)?;
    let k = kernel_matrix(&spec, u, u)?;
    let col_means = column_means(&k);
    let grand = col_means.iter().copied().sum::<T>() / T::from_count(col_means.len());
    let n = k.rows();
    let mut kc = Matrix::from_fn(n, n, |i, j| k[(i, j)] - col_means[j] - col_means[i] + grand);
    let (vc, target_means) = center_columns(v)?;
    for i in 0..n {
        kc[(i, i)] += rho;
    }
    let coef = match spd_solve(&kc, &vc) {
        Ok(c) => c,
        Err(Error::NotPositiveDefinite { .. }) if rho == T::zero() => pinv_solve(&kc, &vc)?,
        Err(Error::NotPositiveDefinite { pivot }) => {
            return Err(Error::Numeric(format!("kernel ridge system singular at pivot {pivot}")))
        }
        Err(e) => return Err(e),
    };
    Ok(Regressor {
        kind: RegressorKind::KernelRidge,
        coef,
        input_means: col_means,
        target_means,
        rho,
        spec: Some(spec),
        u_train: Some(u.clone()),
        kernel_mean: grand,
    })
}

/// Minimum-norm solution of `A X = B` for symmetric PSD `A`.
fn pinv_solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let e = sym_eig(a)?;
    let top = e.values.first().copied().unwrap_or(T::zero()).abs();
    let cutoff = top * T::from_count(a.rows()) * T::epsilon();
    let ut_b = e.vectors.t_matmul(b)?;
    let scaled = Matrix::from_fn(ut_b.rows(), ut_b.cols(), |i, j| {
        if e.values[i] > cutoff {
            ut_b[(i, j)] / e.values[i]
        } else {
            T::zero()
        }
    });
    e.vectors.matmul(&scaled)
}

impl<T: Scalar> Regressor<T> {
    pub fn input_dim(&self) -> usize {
        match self.kind {
            RegressorKind::Ridge => self.coef.rows(),
            RegressorKind::KernelRidge => self.u_train.as_ref().map_or(0, |u| u.cols()),
        }
    }

    pub fn predict(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        if z.cols() != self.input_dim() {
            return invalid(format!("regressor expects {} inputs, got {}", self.input_dim(), z.cols()));
        }
        let centered = match self.kind {
            RegressorKind::Ridge => subtract_row_vector(z, &self.input_means).matmul(&self.coef)?,
            RegressorKind::KernelRidge => {
                let (spec, u) = match (&self.spec, &self.u_train) {
                    (Some(s), Some(u)) => (s, u),
                    _ => return Err(Error::InvalidState("kernel ridge without training inputs".into())),
                };
                let kz = kernel_matrix(spec, z, u)?;
                let n = T::from_count(u.rows());
                let mut kc = kz;
                for i in 0..kc.rows() {
                    let row_mean = kc.row(i).iter().copied().sum::<T>() / n;
                    for (j, val) in kc.row_mut(i).iter_mut().enumerate() {
                        *val = *val - self.input_means[j] - row_mean + self.kernel_mean;
                    }
                }
                kc.matmul(&self.coef)?
            }
        };
        Ok(add_row_vector(&centered, &self.target_means))
    }
}

/// Embedding stage of a pipeline.
#[derive(Clone, Debug, PartialEq)]
pub enum Embedding<T> {
    /// Learn directly on the original spaces.
    None,
    Linear(CmllModel<T>),
    Kernel(KcmllModel<T>),
}

/// Full prediction pipeline: optional standardization, embedding, regressor, decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct Pipeline<T> {
    pub scaler: Option<Standardizer<T>>,
    pub embedding: Embedding<T>,
    pub regressor: Regressor<T>,
    pub delta: T,
}

impl<T: Scalar> Pipeline<T> {
    /// Embedded features for raw inputs.
    pub fn embed(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let scaled;
        let x = match &self.scaler {
            Some(s) => {
                scaled = s.apply(x)?;
                &scaled
            }
            None => x,
        };
        match &self.embedding {
            Embedding::None => Ok(x.clone()),
            Embedding::Linear(m) => encode_features(m, x),
            Embedding::Kernel(m) => kernel_project(m, x),
        }
    }

    fn decoder(&self) -> Option<&Matrix<T>> {
        match &self.embedding {
            Embedding::None => None,
            Embedding::Linear(m) if m.kind == EmbeddingKind::Mddm => None,
            Embedding::Linear(m) => Some(&m.w),
            Embedding::Kernel(m) => Some(&m.w),
        }
    }

    /// Real-valued label confidences before thresholding.
    pub fn predict_scores(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        predict_scores(self, x)
    }

    pub fn predict_labels(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(binarize(&self.predict_scores(x)?, self.delta))
    }
}

/// `regress(embed(x)) W`, or the raw regressor output when there is no decoder.
pub fn predict_scores<T: Scalar>(pipe: &Pipeline<T>, x: &Matrix<T>) -> Result<Matrix<T>> {
    let out = pipe.regressor.predict(&pipe.embed(x)?)?;
    match pipe.decoder() {
        Some(w) => out.matmul(w),
        None => Ok(out),
    }
}

/// 1 where `score > delta` (strict), else 0.
pub fn binarize<T: Scalar>(scores: &Matrix<T>, delta: T) -> Matrix<T> {
    debug_assert!(delta > T::zero() && delta < T::one());
    scores.map(|s| if s > delta { T::one() } else { T::zero() })
}
