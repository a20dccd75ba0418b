//! Multi-label evaluation metrics and misclassification-bound diagnostics.
//!
//! Rankings sort labels by descending score with ascending label index as
//! the tiebreak. Instances with an empty ground-truth set are skipped by the
//! ranking metrics (average precision, ranking loss, one-error, nDCG) and
//! kept by micro-F1 and precision@k. Metric values are reported as `f64`
//! regardless of the scalar type of the inputs.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::learner::Pipeline;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    AveragePrecision,
    MicroF1,
    RankingLoss,
    OneError,
    PrecisionAt(usize),
    NdcgAt(usize),
}

impl Metric {
    /// The six metrics reported by the harness, in report order.
    pub fn standard() -> [Metric; 6] {
        [
            Metric::AveragePrecision,
            Metric::MicroF1,
            Metric::RankingLoss,
            Metric::OneError,
            Metric::PrecisionAt(3),
            Metric::NdcgAt(3),
        ]
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::RankingLoss | Metric::OneError)
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::AveragePrecision => write!(f, "average_precision"),
            Metric::MicroF1 => write!(f, "micro_f1"),
            Metric::RankingLoss => write!(f, "ranking_loss"),
            Metric::OneError => write!(f, "one_error"),
            Metric::PrecisionAt(k) => write!(f, "precision_at_{k}"),
            Metric::NdcgAt(k) => write!(f, "ndcg_at_{k}"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let at = |prefix: &str| -> Option<usize> { s.strip_prefix(prefix).and_then(|k| k.parse().ok()) };
        match s {
            "average_precision" | "ap" => Ok(Metric::AveragePrecision),
            "micro_f1" => Ok(Metric::MicroF1),
            "ranking_loss" => Ok(Metric::RankingLoss),
            "one_error" => Ok(Metric::OneError),
            _ => {
                if let Some(k) = at("precision_at_").filter(|&k| k > 0) {
                    Ok(Metric::PrecisionAt(k))
                } else if let Some(k) = at("ndcg_at_").filter(|&k| k > 0) {
                    Ok(Metric::NdcgAt(k))
                } else {
                    invalid(format!("unknown metric {s:?}"))
                }
            }
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

fn check_shapes<T: Scalar>(y: &Matrix<T>, s: &Matrix<T>) -> Result<()> {
    if y.shape() != s.shape() {
        return invalid(format!(
            "label matrix {}x{} vs prediction matrix {}x{}",
            y.rows(),
            y.cols(),
            s.rows(),
            s.cols()
        ));
    }
    if y.rows() == 0 {
        return invalid("no instances");
    }
    Ok(())
}

/// Label indices by descending score, ascending index on ties.
pub fn ranking<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    idx
}

fn is_relevant<T: Scalar>(v: T) -> bool {
    v > T::c(0.5)
}

/// Mean over non-empty instances of a per-instance value.
fn mean_over_labeled<T: Scalar>(
    y: &Matrix<T>,
    s: &Matrix<T>,
    name: &str,
    per_instance: impl Fn(&[T], &[T]) -> f64,
) -> Result<f64> {
    check_shapes(y, s)?;
    let mut acc = CompensatedSum::default();
    let mut count = 0usize;
    for i in 0..y.rows() {
        let yi = y.row(i);
        if !yi.iter().any(|&v| is_relevant(v)) {
            continue;
        }
        acc.add(per_instance(yi, s.row(i)));
        count += 1;
    }
    if count == 0 {
        return Err(Error::UndefinedMetric(format!("{name}: every instance has an empty label set")));
    }
    Ok(acc.total() / count as f64)
}

pub fn average_precision<T: Scalar>(y: &Matrix<T>, s: &Matrix<T>) -> Result<f64> {
    mean_over_labeled(y, s, "average_precision", |yi, si| {
        let order = ranking(si);
        let mut hits = 0usize;
        let mut total = 0.0;
        for (pos, &l) in order.iter().enumerate() {
            if is_relevant(yi[l]) {
                hits += 1;
                total += hits as f64 / (pos + 1) as f64;
            }
        }
        total / hits as f64
    })
}

/// Fraction of (relevant, irrelevant) pairs ordered wrongly; ties count 1/2.
/// An instance with every label relevant has no pairs and contributes 0.
pub fn ranking_loss<T: Scalar>(y: &Matrix<T>, s: &Matrix<T>) -> Result<f64> {
    mean_over_labeled(y, s, "ranking_loss", |yi, si| {
        let mut rel: Vec<T> = Vec::new();
        let mut irr: Vec<T> = Vec::new();
        for (&l, &sc) in yi.iter().zip(si) {
            if is_relevant(l) {
                rel.push(sc);
            } else {
                irr.push(sc);
            }
        }
        if irr.is_empty() {
            return 0.0;
        }
        // Sort irrelevant scores once, then count by binary search.
        irr.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut bad = 0.0;
        for &r in &rel {
            let below = irr.partition_point(|&x| x < r);
            let not_above = irr.partition_point(|&x| x <= r);
            let ties = not_above - below;
            let above = irr.len() - not_above;
            bad += above as f64 + 0.5 * ties as f64;
        }
        bad / (rel.len() * irr.len()) as f64
    })
}

pub fn one_error<T: Scalar>(y: &Matrix<T>, s: &Matrix<T>) -> Result<f64> {
    mean_over_labeled(y, s, "one_error", |yi, si| {
        let top = ranking(si)[0];
        if is_relevant(yi[top]) {
            0.0
        } else {
            1.0
        }
    })
}

/// `2 TP / (2 TP + FP + FN)` pooled over every cell.
pub fn micro_f1<T: Scalar>(y: &Matrix<T>, yhat: &Matrix<T>) -> Result<f64> {
    check_shapes(y, yhat)?;
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for (&a, &b) in y.as_slice().iter().zip(yhat.as_slice()) {
        match (is_relevant(a), is_relevant(b)) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fnn += 1,
            (false, false) => {}
        }
    }
    let denom = 2 * tp + fp + fnn;
    if denom == 0 {
        return Err(Error::UndefinedMetric("micro_f1: no positive labels or predictions".into()));
    }
    Ok((2 * tp) as f64 / denom as f64)
}

pub fn precision_at_k<T: Scalar>(y: &Matrix<T>, s: &Matrix<T>, k: usize) -> Result<f64> {
    check_shapes(y, s)?;
    if k == 0 {
        return invalid("precision_at_k: k must be positive");
    }
    let mut acc = CompensatedSum::default();
    for i in 0..y.rows() {
        let yi = y.row(i);
        let hits = ranking(s.row(i)).iter().take(k).filter(|&&l| is_relevant(yi[l])).count();
        acc.add(hits as f64 / k as f64);
    }
    Ok(acc.total() / y.rows() as f64)
}

pub fn ndcg_at_k<T: Scalar>(y: &Matrix<T>, s: &Matrix<T>, k: usize) -> Result<f64> {
    if k == 0 {
        return invalid("ndcg_at_k: k must be positive");
    }
    mean_over_labeled(y, s, "ndcg_at_k", |yi, si| {
        let discount = |pos: usize| 1.0 / ((pos + 2) as f64).log2();
        let dcg: f64 = ranking(si)
            .iter()
            .take(k)
            .enumerate()
            .filter(|(_, &l)| is_relevant(yi[l]))
            .map(|(pos, _)| discount(pos))
            .sum();
        let n_rel = yi.iter().filter(|&&v| is_relevant(v)).count();
        let ideal: f64 = (0..n_rel.min(k)).map(discount).sum();
        dcg / ideal
    })
}

/// Evaluates one metric. Threshold-based metrics use `yhat`, ranking ones `scores`.
pub fn evaluate<T: Scalar>(metric: Metric, y: &Matrix<T>, scores: &Matrix<T>, yhat: &Matrix<T>) -> Result<f64> {
    match metric {
        Metric::AveragePrecision => average_precision(y, scores),
        Metric::MicroF1 => micro_f1(y, yhat),
        Metric::RankingLoss => ranking_loss(y, scores),
        Metric::OneError => one_error(y, scores),
        Metric::PrecisionAt(k) => precision_at_k(y, scores, k),
        Metric::NdcgAt(k) => ndcg_at_k(y, scores, k),
    }
}

/// Mean and sample standard deviation of one metric across folds.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSummary {
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    /// Folds that contributed a value.
    pub folds: usize,
    /// Folds on which the metric was undefined.
    pub undefined: usize,
}

/// Per-metric fold summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub summaries: Vec<MetricSummary>,
}

impl EvalReport {
    /// Aggregates fold-level values (`None` = undefined on that fold).
    pub fn from_folds(metrics: &[Metric], per_fold: &[Vec<Option<f64>>]) -> Self {
        let summaries = metrics
            .iter()
            .enumerate()
            .map(|(mi, &metric)| {
                let vals: Vec<f64> = per_fold.iter().filter_map(|f| f[mi]).collect();
                let undefined = per_fold.len() - vals.len();
                if undefined > 0 {
                    log::warn!("{metric} undefined on {undefined} fold(s); excluded from aggregation");
                }
                let (mean, std) = mean_std(&vals);
                MetricSummary { metric, mean, std, folds: vals.len(), undefined }
            })
            .collect();
        EvalReport { summaries }
    }

    pub fn get(&self, metric: Metric) -> Option<&MetricSummary> {
        self.summaries.iter().find(|s| s.metric == metric)
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        self.get(metric).map(|s| s.mean)
    }
}

/// Mean and sample (n-1) standard deviation; NaN mean for an empty slice.
pub fn mean_std(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut acc = CompensatedSum::default();
    vals.iter().for_each(|&v| acc.add(v));
    let mean = acc.total() / vals.len() as f64;
    if vals.len() < 2 {
        return (mean, 0.0);
    }
    let mut sq = CompensatedSum::default();
    vals.iter().for_each(|&v| sq.add((v - mean) * (v - mean)));
    (mean, (sq.total() / (vals.len() - 1) as f64).sqrt())
}

/// Outcome of the misclassification bound for one instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    /// Misclassified labels, counting `yhat_i >= delta` as a positive prediction.
    pub n_mis: usize,
    /// `max(1/delta^2, 1/(1-delta)^2)`
    pub tau: f64,
    /// `||yhat - y||^2`
    pub sq_error: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `n_mis <= tau ||yhat - y||^2`.
pub fn theorem1_bound<T: Scalar>(y: &[T], yhat: &[T], delta: f64) -> Result<BoundCheck> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    if y.len() != yhat.len() {
        return invalid("theorem1_bound: length mismatch");
    }
    let tau = (1.0 / (delta * delta)).max(1.0 / ((1.0 - delta) * (1.0 - delta)));
    let mut n_mis = 0;
    let mut sq = CompensatedSum::default();
    for (&yi, &pi) in y.iter().zip(yhat) {
        let (yi, pi) = (yi.as_f64(), pi.as_f64());
        let predicted = pi >= delta;
        if predicted != (yi > 0.5) {
            n_mis += 1;
        }
        sq.add((pi - yi) * (pi - yi));
    }
    let sq_error = sq.total();
    let bound = tau * sq_error;
    Ok(BoundCheck { n_mis, tau, sq_error, bound, holds: n_mis as f64 <= bound })
}

/// Realized bound values of one pipeline on held-out data.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundColumn {
    pub label: String,
    pub per_instance: Vec<BoundCheck>,
    pub mean_bound: f64,
    pub mean_n_mis: f64,
}

/// Bound values for feature-embedding, label-compression and compact
/// pipelines evaluated on the same test split.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundTable {
    pub columns: Vec<BoundColumn>,
}

impl BoundTable {
    pub fn column(&self, label: &str) -> Option<&BoundColumn> {
        self.columns.iter().find(|c| c.label == label)
    }
}

/// `tau ||prediction - y||^2` per instance for each labeled pipeline.
pub fn bound_diagnostics<T: Scalar>(
    pipelines: &[(&str, &Pipeline<T>)],
    x_test: &Matrix<T>,
    y_test: &Matrix<T>,
    delta: f64,
) -> Result<BoundTable> {
    if x_test.rows() != y_test.rows() {
        return invalid(format!(
            "test split mismatch: {} feature rows vs {} label rows",
            x_test.rows(),
            y_test.rows()
        ));
    }
    let mut columns = Vec::with_capacity(pipelines.len());
    for &(label, pipe) in pipelines {
        let scores = pipe.predict_scores(x_test)?;
        if scores.shape() != y_test.shape() {
            return invalid(format!("pipeline {label} predicts {} labels, test split has {}", scores.cols(), y_test.cols()));
        }
        let per_instance = (0..y_test.rows())
            .map(|i| theorem1_bound(y_test.row(i), scores.row(i), delta))
            .collect::<Result<Vec<_>>>()?;
        let n = per_instance.len().max(1) as f64;
        let mean_bound = per_instance.iter().map(|b| b.bound).sum::<f64>() / n;
        let mean_n_mis = per_instance.iter().map(|b| b.n_mis as f64).sum::<f64>() / n;
        columns.push(BoundColumn { label: label.to_string(), per_instance, mean_bound, mean_n_mis });
    }
    Ok(BoundTable { columns })
}
