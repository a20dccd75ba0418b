use crate::data::{Dataset, Standardizer};
use crate::embedding::{fit_cmll, fit_dependence_only, fit_recovery_only, CmllModel};
use crate::error::{invalid, Result};
use crate::harness::config::{ExperimentConfig, Method};
use crate::harness::cv::cross_validate;
use crate::linalg::{center_columns, Matrix};
use crate::metrics::EvalReport;
use crate::scalar::Scalar;

/// Tolerance on normalized values before clamping.
pub const NORM_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub alpha: f64,
    pub dep: f64,
    pub rec: f64,
    pub dep_norm: f64,
    pub rec_norm: f64,
    /// A normalized value left `[0, 1]` by more than the slack and was clamped.
    pub clamped: bool,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityReport {
    pub dep_min: f64,
    pub dep_max: f64,
    pub rec_min: f64,
    pub rec_max: f64,
    pub rows: Vec<SensitivityRow>,
}

/// `(dep, rec)` = `(||(Xc P)^t V||^2, ||Y^t V||^2)`.
pub fn dep_rec<T: Scalar>(model: &CmllModel<T>, xc: &Matrix<T>, y: &Matrix<T>) -> Result<(f64, f64)> {
    let dep = xc.matmul(&model.p)?.t_matmul(&model.v)?.frobenius_sq().as_f64();
    let rec = y.t_matmul(&model.v)?.frobenius_sq().as_f64();
    Ok((dep, rec))
}

/// `(value - lo) / (hi - lo)`, clamped into `[0, 1]` when outside by more than the slack.
fn normalize(value: f64, lo: f64, hi: f64, what: &str, alpha: f64) -> (f64, bool) {
    let span = hi - lo;
    if !(span.abs() > f64::EPSILON * hi.abs().max(1.0)) {
        log::warn!("{what} anchors coincide ({lo}); normalized value set to 1");
        return (1.0, false);
    }
    let t = (value - lo) / span;
    if t < -NORM_SLACK || t > 1.0 + NORM_SLACK {
        log::warn!("{what}' = {t} at alpha = {alpha} lies outside [0, 1]; clamped");
        (t.clamp(0.0, 1.0), true)
    } else {
        (t, false)
    }
}

/// Dependence/recovery trade-off across `alphas`, with fold metrics per α.
pub fn alpha_sensitivity<T: Scalar>(
    data: &Dataset<T>,
    base: &ExperimentConfig<T>,
    alphas: &[f64],
) -> Result<SensitivityReport> {
    base.validate()?;
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
        return invalid("alphas must be a non-empty list of positive values");
    }
    let scaled;
    let full = if base.standardize {
        let s = Standardizer::fit(&data.x);
        scaled = Dataset { x: s.apply(&data.x)?, y: data.y.clone(), name: data.name.clone() };
        &scaled
    } else {
        data
    };
    let cfg0 = ExperimentConfig { method: Method::Cmll, ..base.clone() };
    let params = cfg0.params(full.n(), full.d(), full.m());
    let (xc, _) = center_columns(&full.x)?;

    let (dep_max, rec_min) = dep_rec(&fit_dependence_only(full, &params)?, &xc, &full.y)?;
    let (dep_min, rec_max) = dep_rec(&fit_recovery_only(full, &params)?, &xc, &full.y)?;

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let cfg = ExperimentConfig { alpha: T::c(alpha), ..cfg0.clone() };
        let model = fit_cmll(full, &cfg.params(full.n(), full.d(), full.m()))?;
        let (dep, rec) = dep_rec(&model, &xc, &full.y)?;
        let (dep_norm, c1) = normalize(dep, dep_min, dep_max, "dep", alpha);
        let (rec_norm, c2) = normalize(rec, rec_min, rec_max, "rec", alpha);
        let report = cross_validate(data, &cfg)?;
        rows.push(SensitivityRow { alpha, dep, rec, dep_norm, rec_norm, clamped: c1 || c2, report });
    }
    Ok(SensitivityReport { dep_min, dep_max, rec_min, rec_max, rows })
}

/// `10^-4, 10^-3, ..., 10^4`
pub fn default_alphas() -> Vec<f64> {
    (-4..=4).map(|e| 10f64.powi(e)).collect()
}
