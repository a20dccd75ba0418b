use rayon::prelude::*;

use crate::data::{split_folds, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::harness::config::{fit_pipeline, ExperimentConfig};
use crate::learner::{binarize, Pipeline};
use crate::metrics::{evaluate, EvalReport, Metric};
use crate::scalar::Scalar;

/// The six reported metrics with the configured cutoff.
pub fn report_metrics<T: Scalar>(cfg: &ExperimentConfig<T>) -> Vec<Metric> {
    Metric::standard()
        .into_iter()
        .map(|m| match m {
            Metric::PrecisionAt(_) => Metric::PrecisionAt(cfg.at_k),
            Metric::NdcgAt(_) => Metric::NdcgAt(cfg.at_k),
            other => other,
        })
        .collect()
}

/// Scores `pipe` on a held-out split; undefined metrics come back as `None`.
pub fn score_split<T: Scalar>(
    pipe: &Pipeline<T>,
    test: &Dataset<T>,
    metrics: &[Metric],
) -> Result<Vec<Option<f64>>> {
    let scores = pipe.predict_scores(&test.x)?;
    let yhat = binarize(&scores, pipe.delta);
    metrics
        .iter()
        .map(|&metric| match evaluate(metric, &test.y, &scores, &yhat) {
            Ok(v) => Ok(Some(v)),
            Err(Error::UndefinedMetric(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn fold_splits<T: Scalar>(data: &Dataset<T>, plan: &FoldPlan, fold: usize) -> (Dataset<T>, Dataset<T>) {
    (data.subset(&plan.train_indices(fold)), data.subset(&plan.test_indices(fold)))
}

/// Maps folds in order, on the rayon pool when `parallel` is set.
fn map_folds<R: Send>(
    k: usize,
    parallel: bool,
    f: impl Fn(usize) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    if parallel {
        (0..k).into_par_iter().map(f).collect()
    } else {
        (0..k).map(f).collect()
    }
}

/// Pipelines fitted on each training split (fold order).
pub fn fold_models<T: Scalar>(data: &Dataset<T>, cfg: &ExperimentConfig<T>) -> Result<Vec<Pipeline<T>>> {
    cfg.validate()?;
    let plan = split_folds(data.n(), cfg.folds, cfg.seed)?;
    map_folds(cfg.folds, cfg.parallel, |fold| {
        let (train, _) = fold_splits(data, &plan, fold);
        fit_pipeline(&train, cfg)
    })
}

/// Fold-level metric values, one row per fold.
pub fn cross_validate_folds<T: Scalar>(
    data: &Dataset<T>,
    cfg: &ExperimentConfig<T>,
) -> Result<Vec<Vec<Option<f64>>>> {
    cfg.validate()?;
    let plan = split_folds(data.n(), cfg.folds, cfg.seed)?;
    let metrics = report_metrics(cfg);
    map_folds(cfg.folds, cfg.parallel, |fold| {
        let (train, test) = fold_splits(data, &plan, fold);
        let pipe = fit_pipeline(&train, cfg)?;
        score_split(&pipe, &test, &metrics)
    })
}

pub fn cross_validate<T: Scalar>(data: &Dataset<T>, cfg: &ExperimentConfig<T>) -> Result<EvalReport> {
    let per_fold = cross_validate_folds(data, cfg)?;
    Ok(EvalReport::from_folds(&report_metrics(cfg), &per_fold))
}
