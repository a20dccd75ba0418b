//! Linear compact embedding and its two degenerate special cases.

use crate::data::Dataset;
use crate::embedding::{
    alternate, gram_top_eigvecs, label_step, random_orthonormal, weighted_gamma,
    AlternationSettings, IterationRecord,
};
use crate::error::{invalid, Result};
use crate::linalg::{center_columns, subtract_row_vector, Matrix};
use crate::scalar::Scalar;

/// Hyperparameters shared by every embedding fit.
#[derive(Clone, Debug, PartialEq)]
pub struct CmllParams<T> {
    /// Normalized balance `alpha * (1 + lambda)` between dependence and recovery.
    pub beta: T,
    /// Decoder ridge coefficient.
    pub lambda: T,
    /// Embedded label dimension.
    pub m: usize,
    /// Embedded feature dimension.
    pub d: usize,
    pub maxc: usize,
    pub tol: T,
    pub seed: u64,
}

impl<T: Scalar> CmllParams<T> {
    /// `beta = 1`, `lambda = 0`, `tol = 1e-5`, `maxc = 50`, seed 0.
    pub fn new(m: usize, d: usize) -> Self {
        CmllParams { beta: T::one(), lambda: T::zero(), m, d, maxc: 50, tol: T::c(1e-5), seed: 0 }
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_maxc(mut self, maxc: usize) -> Self {
        self.maxc = maxc;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks ranges against data of `n` instances, `d_feat` features and `m_lab` labels.
    pub fn validate(&self, n: usize, d_feat: usize, m_lab: usize) -> Result<()> {
        if !(self.beta >= T::zero()) || !self.beta.is_finite() {
            return invalid(format!("beta must be finite and non-negative, got {}", self.beta));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return invalid(format!("lambda must be finite and non-negative, got {}", self.lambda));
        }
        if self.m == 0 || self.m > m_lab || self.m > n {
            return invalid(format!("m = {} outside 1..={}", self.m, m_lab.min(n)));
        }
        if self.d == 0 || self.d > d_feat {
            return invalid(format!("d = {} outside 1..={d_feat}", self.d));
        }
        if !(self.tol > T::zero()) {
            return invalid("tol must be positive");
        }
        if self.maxc == 0 {
            return invalid("maxc must be at least 1");
        }
        Ok(())
    }
}

/// Which optimizer produced a linear model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingKind {
    /// Joint alternation over `V` and `P`.
    Cmll,
    /// Label embedding only; `P = I`.
    CmllY,
    /// Feature embedding only; labels pass through, `W = I`.
    Mddm,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Cmll => "cmll",
            EmbeddingKind::CmllY => "cmll_y",
            EmbeddingKind::Mddm => "mddm",
        }
    }
}

/// Fitted linear embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct CmllModel<T> {
    pub kind: EmbeddingKind,
    /// Feature projection, `D x d`, orthonormal columns.
    pub p: Matrix<T>,
    /// Embedded training labels, `N x m` (raw `Y` for MDDM).
    pub v: Matrix<T>,
    /// Decoder `m x M`.
    pub w: Matrix<T>,
    pub feature_means: Vec<T>,
    pub params: CmllParams<T>,
    pub trace: Vec<IterationRecord<T>>,
}

impl<T: Scalar> CmllModel<T> {
    pub fn final_gamma(&self) -> T {
        self.trace.last().map_or(T::zero(), |r| r.gamma)
    }

    /// Number of sweeps actually run.
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn converged(&self) -> bool {
        self.trace.last().is_some_and(|r| r.delta < self.params.tol)
    }
}

/// `tr[V^t (beta Xc P P^t Xc^t + Y Y^t) V]`, evaluated as
/// `beta ||(Xc P)^t V||_F^2 + ||Y^t V||_F^2`.
pub fn objective_gamma<T: Scalar>(
    v: &Matrix<T>,
    p: &Matrix<T>,
    xc: &Matrix<T>,
    y: &Matrix<T>,
    beta: T,
) -> Result<T> {
    if v.rows() != xc.rows() || y.rows() != xc.rows() {
        return invalid("objective_gamma: row counts differ");
    }
    weighted_gamma(&xc.matmul(p)?, v, y, beta, T::one())
}

/// Closed-form ridge decoder for orthonormal `V`: `W = V^t Y / (1 + lambda)`.
pub fn decoder_w<T: Scalar>(v: &Matrix<T>, y: &Matrix<T>, lambda: T) -> Result<Matrix<T>> {
    let vty = v.t_matmul(y)?;
    let denom = T::one() + lambda;
    Ok(vty.map(|x| x / denom))
}

/// `(X_new - e mu^t) P`
pub fn encode_features<T: Scalar>(model: &CmllModel<T>, x_new: &Matrix<T>) -> Result<Matrix<T>> {
    if x_new.cols() != model.feature_means.len() {
        return invalid(format!(
            "encode_features: expected {} columns, got {}",
            model.feature_means.len(),
            x_new.cols()
        ));
    }
    subtract_row_vector(x_new, &model.feature_means).matmul(&model.p)
}

/// Feature-side step: top-`d` eigenvectors of `Xc^t V V^t Xc`.
fn projection_step<T: Scalar>(xc: &Matrix<T>, v: &Matrix<T>, d: usize) -> Result<Matrix<T>> {
    Ok(gram_top_eigvecs(&xc.t_matmul(v)?, d)?.vectors)
}

/// Alternating maximization over `(V, P)` from a seeded random orthonormal `P`.
pub fn fit_cmll<T: Scalar>(data: &Dataset<T>, params: &CmllParams<T>) -> Result<CmllModel<T>> {
    params.validate(data.n(), data.d(), data.m())?;
    let p0 = random_orthonormal(data.d(), params.d, params.seed);
    fit_cmll_with_init(data, params, p0)
}

/// As [`fit_cmll`] but starting from a caller-supplied `P0` (`D x d`,
/// orthonormal columns).
pub fn fit_cmll_with_init<T: Scalar>(
    data: &Dataset<T>,
    params: &CmllParams<T>,
    p0: Matrix<T>,
) -> Result<CmllModel<T>> {
    params.validate(data.n(), data.d(), data.m())?;
    if p0.shape() != (data.d(), params.d) {
        return invalid(format!(
            "initial projection is {}x{}, expected {}x{}",
            p0.rows(),
            p0.cols(),
            data.d(),
            params.d
        ));
    }
    let (xc, means) = center_columns(&data.x)?;
    let settings = AlternationSettings {
        beta: params.beta,
        recovery_weight: T::one(),
        m: params.m,
        maxc: params.maxc,
        tol: params.tol,
    };
    let out = alternate(
        p0,
        &data.y,
        &settings,
        |p| xc.matmul(p),
        |v| projection_step(&xc, v, params.d),
    )?;
    let w = decoder_w(&out.v, &data.y, params.lambda)?;
    Ok(CmllModel {
        kind: EmbeddingKind::Cmll,
        p: out.state,
        v: out.v,
        w,
        feature_means: means,
        params: params.clone(),
        trace: out.trace,
    })
}

/// Label compression without feature embedding: `P = I`, one V-solve on
/// `beta Xc Xc^t + Y Y^t`. Requires `d = D`.
pub fn fit_cmll_y<T: Scalar>(data: &Dataset<T>, params: &CmllParams<T>) -> Result<CmllModel<T>> {
    params.validate(data.n(), data.d(), data.m())?;
    if params.d != data.d() {
        return invalid(format!("cmll_y requires d = D = {}, got {}", data.d(), params.d));
    }
    let (xc, means) = center_columns(&data.x)?;
    let v = label_step(&xc, &data.y, params.beta, T::one(), params.m)?;
    let gamma = weighted_gamma(&xc, &v, &data.y, params.beta, T::one())?;
    let w = decoder_w(&v, &data.y, params.lambda)?;
    Ok(CmllModel {
        kind: EmbeddingKind::CmllY,
        p: Matrix::identity(data.d()),
        v,
        w,
        feature_means: means,
        params: params.clone(),
        trace: vec![IterationRecord { gamma, delta: T::zero() }],
    })
}

/// Supervised feature embedding with uncompressed labels: `P` = top-`d`
/// eigenvectors of `Xc^t Y Y^t Xc`. Requires `m = M`; the decoder is the identity.
pub fn fit_mddm<T: Scalar>(data: &Dataset<T>, params: &CmllParams<T>) -> Result<CmllModel<T>> {
    params.validate(data.n(), data.d(), data.m())?;
    if params.m != data.m() {
        return invalid(format!("mddm requires m = M = {}, got {}", data.m(), params.m));
    }
    let (xc, means) = center_columns(&data.x)?;
    let p = projection_step(&xc, &data.y, params.d)?;
    let gamma = objective_gamma(&data.y, &p, &xc, &data.y, params.beta)?;
    Ok(CmllModel {
        kind: EmbeddingKind::Mddm,
        p,
        v: data.y.clone(),
        w: Matrix::identity(data.m()),
        feature_means: means,
        params: params.clone(),
        trace: vec![IterationRecord { gamma, delta: T::zero() }],
    })
}

/// Dependence-only problem (recovery term dropped), solved with the same
/// alternation. The trace records the dependence term alone.
pub fn fit_dependence_only<T: Scalar>(
    data: &Dataset<T>,
    params: &CmllParams<T>,
) -> Result<CmllModel<T>> {
    params.validate(data.n(), data.d(), data.m())?;
    let (xc, means) = center_columns(&data.x)?;
    let settings = AlternationSettings {
        beta: T::one(),
        recovery_weight: T::zero(),
        m: params.m,
        maxc: params.maxc,
        tol: params.tol,
    };
    let p0 = random_orthonormal(data.d(), params.d, params.seed);
    let out = alternate(p0, &data.y, &settings, |p| xc.matmul(p), |v| projection_step(&xc, v, params.d))?;
    let w = decoder_w(&out.v, &data.y, params.lambda)?;
    Ok(CmllModel {
        kind: EmbeddingKind::Cmll,
        p: out.state,
        v: out.v,
        w,
        feature_means: means,
        params: params.clone(),
        trace: out.trace,
    })
}

/// Recovery-only problem: `V` = top-`m` eigenvectors of `Y Y^t`, then the
/// best `P` for that `V`.
pub fn fit_recovery_only<T: Scalar>(
    data: &Dataset<T>,
    params: &CmllParams<T>,
) -> Result<CmllModel<T>> {
    params.validate(data.n(), data.d(), data.m())?;
    let (xc, means) = center_columns(&data.x)?;
    let v = label_step(&xc, &data.y, T::zero(), T::one(), params.m)?;
    let p = projection_step(&xc, &v, params.d)?;
    let gamma = weighted_gamma(&xc, &v, &data.y, T::zero(), T::one())?;
    let w = decoder_w(&v, &data.y, params.lambda)?;
    Ok(CmllModel {
        kind: EmbeddingKind::Cmll,
        p,
        v,
        w,
        feature_means: means,
        params: params.clone(),
        trace: vec![IterationRecord { gamma, delta: T::zero() }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{spd_solve, sym_eig_topk};

    type M = Matrix<f64>;

    fn toy(n: usize, d: usize, m: usize, seed: u64) -> Dataset<f64> {
        let x: M = random_orthonormal(n, d, seed).scale(3.0);
        let z: M = random_orthonormal(n, m, seed + 100);
        let y = M::from_fn(n, m, |i, j| if z[(i, j)] + 0.05 * x[(i, j % d)] > 0.0 { 1.0 } else { 0.0 });
        Dataset::new(x, y, "toy").unwrap()
    }

    #[test]
    fn decoder_identity_cases() {
        let v = M::identity(2);
        let y = M::identity(2);
        assert_eq!(decoder_w(&v, &y, 0.0).unwrap(), M::identity(2));
        assert_eq!(decoder_w(&v, &y, 1.0).unwrap(), M::identity(2).scale(0.5));
    }

    #[test]
    fn decoder_matches_linear_solve() {
        let v: M = random_orthonormal(9, 3, 1);
        let y = M::from_fn(9, 4, |i, j| ((i + j) % 3 == 0) as u8 as f64);
        let lambda = 0.3;
        let mut lhs = v.t_matmul(&v).unwrap();
        for i in 0..3 {
            lhs[(i, i)] += lambda;
        }
        let direct = spd_solve(&lhs, &v.t_matmul(&y).unwrap()).unwrap();
        assert!(decoder_w(&v, &y, lambda).unwrap().max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn gamma_beta_zero_at_label_eigvecs() {
        let ds = toy(10, 3, 4, 3);
        let yyt = ds.y.matmul_t(&ds.y).unwrap();
        let e = sym_eig_topk(&yyt, 2).unwrap();
        let (xc, _) = center_columns(&ds.x).unwrap();
        let p: M = random_orthonormal(3, 2, 0);
        let g = objective_gamma(&e.vectors, &p, &xc, &ds.y, 0.0).unwrap();
        assert!((g - (e.values[0] + e.values[1])).abs() < 1e-10 * g);
    }

    #[test]
    fn gamma_zero_labels() {
        let ds = toy(8, 3, 2, 4);
        let (xc, _) = center_columns(&ds.x).unwrap();
        let v: M = random_orthonormal(8, 2, 1);
        let p: M = random_orthonormal(3, 2, 2);
        let y0 = M::zeros(8, 2);
        let g = objective_gamma(&v, &p, &xc, &y0, 2.0).unwrap();
        let dep = xc.matmul(&p).unwrap().t_matmul(&v).unwrap().frobenius_sq();
        assert!(g >= 0.0);
        assert!((g - 2.0 * dep).abs() < 1e-12 * g.max(1.0));
    }

    #[test]
    fn params_rejected() {
        let ds = toy(10, 3, 4, 1);
        assert!(fit_cmll(&ds, &CmllParams::new(5, 2)).is_err());
        assert!(fit_cmll(&ds, &CmllParams::new(2, 4)).is_err());
        assert!(fit_cmll(&ds, &CmllParams::new(0, 2)).is_err());
        assert!(fit_cmll(&ds, &CmllParams::new(2, 2).with_tol(0.0)).is_err());
        assert!(fit_cmll(&ds, &CmllParams::new(2, 2).with_maxc(0)).is_err());
        assert!(fit_cmll(&ds, &CmllParams::new(2, 2).with_beta(-1.0)).is_err());
        assert!(fit_cmll_y(&ds, &CmllParams::new(2, 2)).is_err());
        assert!(fit_mddm(&ds, &CmllParams::new(2, 2)).is_err());
    }

    #[test]
    fn defaults_recorded() {
        let p = CmllParams::<f64>::new(2, 2);
        assert_eq!(p.tol, 1e-5);
        assert_eq!(p.maxc, 50);
        let model = fit_cmll(&toy(12, 3, 3, 2), &p).unwrap();
        assert_eq!(model.params, p);
        assert!(model.iterations() <= 50);
    }

    #[test]
    fn encode_training_rows_bit_exact() {
        let ds = toy(15, 4, 3, 7);
        let model = fit_cmll(&ds, &CmllParams::new(2, 2)).unwrap();
        let (xc, _) = center_columns(&ds.x).unwrap();
        assert_eq!(encode_features(&model, &ds.x).unwrap(), xc.matmul(&model.p).unwrap());
        let mean_row = M::from_vec(1, 4, model.feature_means.clone()).unwrap();
        assert_eq!(encode_features(&model, &mean_row).unwrap(), M::zeros(1, 2));
        assert!(encode_features(&model, &M::zeros(1, 3)).is_err());
    }

    #[test]
    fn mddm_decoder_and_slot() {
        let ds = toy(12, 4, 3, 9);
        let model = fit_mddm(&ds, &CmllParams::new(3, 2)).unwrap();
        assert_eq!(model.w, M::identity(3));
        assert_eq!(model.v, ds.y);
        assert!(model.p.orthonormality_error() < 1e-12);
        assert_eq!(model, fit_mddm(&ds, &CmllParams::new(3, 2)).unwrap());
    }

    #[test]
    fn f32_fit_runs() {
        let ds = toy(20, 4, 3, 1);
        let ds32 = Dataset::new(ds.x.cast::<f32>(), ds.y.cast::<f32>(), "f32").unwrap();
        let model = fit_cmll(&ds32, &CmllParams::new(2, 2)).unwrap();
        assert!(model.v.orthonormality_error() < 1e-4);
    }
}
