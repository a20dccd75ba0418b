use crate::data::{split_folds, Dataset};
use crate::error::Result;
use crate::harness::config::{fit_pipeline, ExperimentConfig, Method};
use crate::metrics::{bound_diagnostics, BoundTable};
use crate::scalar::Scalar;

pub const FE_LABEL: &str = "Z_FE";
pub const LC_LABEL: &str = "Z_LC";
pub const CL_LABEL: &str = "Z_CL";

/// Fits feature-embedding (MDDM), label-compression (CMLL_y) and compact
/// (CMLL) pipelines on the first training fold and evaluates the bound on its
/// test fold.
pub fn bounds_experiment<T: Scalar>(data: &Dataset<T>, base: &ExperimentConfig<T>) -> Result<BoundTable> {
    base.validate()?;
    let plan = split_folds(data.n(), base.folds, base.seed)?;
    let train = data.subset(&plan.train_indices(0));
    let test = data.subset(&plan.test_indices(0));
    let fit = |method| fit_pipeline(&train, &ExperimentConfig { method, ..base.clone() });
    let fe = fit(Method::Mddm)?;
    let lc = fit(Method::CmllY)?;
    let cl = fit(Method::Cmll)?;
    bound_diagnostics(
        &[(FE_LABEL, &fe), (LC_LABEL, &lc), (CL_LABEL, &cl)],
        &test.x,
        &test.y,
        base.delta.as_f64(),
    )
}
