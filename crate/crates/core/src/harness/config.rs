use std::fmt;
use std::str::FromStr;

use crate::data::{Dataset, Standardizer};
use crate::embedding::kernel::fit_kcmll_with_ridge;
use crate::embedding::{
    encode_features, fit_cmll, fit_cmll_y, fit_mddm, kernel_project, CmllParams, KernelSpec,
};
use crate::error::{invalid, Error, Result};
use crate::learner::{kridge_fit, ridge_fit, Embedding, Pipeline, RegressorKind};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Cmll,
    Kcmll,
    CmllY,
    Mddm,
    /// No embedding: learn on the original feature and label spaces.
    Ori,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cmll => "cmll",
            Method::Kcmll => "kcmll",
            Method::CmllY => "cmll_y",
            Method::Mddm => "mddm",
            Method::Ori => "ori",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cmll" => Ok(Method::Cmll),
            "kcmll" => Ok(Method::Kcmll),
            "cmll_y" => Ok(Method::CmllY),
            "mddm" => Ok(Method::Mddm),
            "ori" => Ok(Method::Ori),
            _ => invalid(format!("unknown method {s:?}")),
        }
    }
}

/// Everything needed to fit and evaluate one pipeline configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig<T> {
    pub method: Method,
    /// Feature compression ratio `d / D`.
    pub mu: T,
    /// Label compression ratio `m / M`.
    pub nu: T,
    /// Dependence/recovery balance; the optimizer uses `beta = alpha (1 + lambda)`.
    pub alpha: T,
    pub lambda: T,
    /// Learner regularization.
    pub rho: T,
    pub delta: T,
    pub tol: T,
    pub maxc: usize,
    pub folds: usize,
    pub seed: u64,
    pub kernel: KernelSpec<T>,
    /// Jitter on the kernel metric; `None` uses the default.
    pub kernel_ridge: Option<T>,
    /// Overrides the default learner (kernel ridge for `kcmll`, ridge otherwise).
    pub learner: Option<RegressorKind>,
    pub standardize: bool,
    /// Run folds and grid cells on the rayon pool.
    pub parallel: bool,
    /// Cutoff for precision@k and nDCG@k.
    pub at_k: usize,
}

impl<T: Scalar> Default for ExperimentConfig<T> {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::Cmll,
            mu: T::c(0.5),
            nu: T::c(0.5),
            alpha: T::one(),
            lambda: T::zero(),
            rho: T::c(0.1),
            delta: T::c(0.5),
            tol: T::c(1e-5),
            maxc: 50,
            folds: 5,
            seed: 0,
            kernel: KernelSpec::rbf_median(),
            kernel_ridge: None,
            learner: None,
            standardize: false,
            parallel: false,
            at_k: 3,
        }
    }
}

fn ratio_dim<T: Scalar>(ratio: T, full: usize) -> usize {
    let raw = (ratio.as_f64() * full as f64).round() as usize;
    raw.clamp(1, full)
}

impl<T: Scalar> ExperimentConfig<T> {
    pub fn beta(&self) -> T {
        self.alpha * (T::one() + self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("mu", self.mu), ("nu", self.nu)] {
            if !(r > T::zero() && r <= T::one()) {
                return invalid(format!("{name} must lie in (0, 1], got {r}"));
            }
        }
        if !(self.delta > T::zero() && self.delta < T::one()) {
            return invalid(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.alpha >= T::zero()) {
            return invalid("alpha must be non-negative");
        }
        if self.folds < 2 {
            return invalid("folds must be at least 2");
        }
        if self.at_k == 0 {
            return invalid("at_k must be positive");
        }
        Ok(())
    }

    /// `(m, d)` for data with `d_feat` features, `m_lab` labels and `n` instances.
    pub fn dims(&self, n: usize, d_feat: usize, m_lab: usize) -> (usize, usize) {
        let m = match self.method {
            Method::Mddm => m_lab,
            _ => ratio_dim(self.nu, m_lab).min(n),
        };
        let d = match self.method {
            Method::CmllY => d_feat,
            Method::Kcmll => ratio_dim(self.mu, d_feat).min(n),
            _ => ratio_dim(self.mu, d_feat),
        };
        (m, d)
    }

    pub fn params(&self, n: usize, d_feat: usize, m_lab: usize) -> CmllParams<T> {
        let (m, d) = self.dims(n, d_feat, m_lab);
        CmllParams {
            beta: self.beta(),
            lambda: self.lambda,
            m,
            d,
            maxc: self.maxc,
            tol: self.tol,
            seed: self.seed,
        }
    }

    fn learner_kind(&self) -> RegressorKind {
        self.learner.unwrap_or(match self.method {
            Method::Kcmll => RegressorKind::KernelRidge,
            _ => RegressorKind::Ridge,
        })
    }
}

/// Fits the configured pipeline on `data` (every statistic comes from `data` only).
pub fn fit_pipeline<T: Scalar>(data: &Dataset<T>, cfg: &ExperimentConfig<T>) -> Result<Pipeline<T>> {
    cfg.validate()?;
    let scaler = cfg.standardize.then(|| Standardizer::fit(&data.x));
    let scaled;
    let data = match &scaler {
        Some(s) => {
            scaled = Dataset { x: s.apply(&data.x)?, y: data.y.clone(), name: data.name.clone() };
            &scaled
        }
        None => data,
    };
    let params = cfg.params(data.n(), data.d(), data.m());
    let (embedding, u, target) = match cfg.method {
        Method::Ori => (Embedding::None, data.x.clone(), data.y.clone()),
        Method::Cmll | Method::CmllY | Method::Mddm => {
            let model = match cfg.method {
                Method::Cmll => fit_cmll(data, &params)?,
                Method::CmllY => fit_cmll_y(data, &params)?,
                _ => fit_mddm(data, &params)?,
            };
            let u = encode_features(&model, &data.x)?;
            let target = model.v.clone();
            (Embedding::Linear(model), u, target)
        }
        Method::Kcmll => {
            let model = fit_kcmll_with_ridge(data, &cfg.kernel, &params, cfg.kernel_ridge)?;
            let u = kernel_project(&model, &data.x)?;
            let target = model.v.clone();
            (Embedding::Kernel(model), u, target)
        }
    };
    let regressor = match cfg.learner_kind() {
        RegressorKind::Ridge => ridge_fit(&u, &target, cfg.rho)?,
        RegressorKind::KernelRidge => kridge_fit(&u, &target, cfg.rho, &cfg.kernel)?,
    };
    Ok(Pipeline { scaler, embedding, regressor, delta: cfg.delta })
}
