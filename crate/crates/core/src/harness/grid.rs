use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::cv::cross_validate;
use crate::metrics::{EvalReport, Metric};
use crate::scalar::Scalar;

/// The ratio scan set `{0.1, 0.2, ..., 1.0}`.
pub fn ratio_scan() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scan {
    Mu,
    Nu,
    Full,
}

impl Scan {
    pub fn as_str(self) -> &'static str {
        match self {
            Scan::Mu => "mu",
            Scan::Nu => "nu",
            Scan::Full => "full",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub scan: Scan,
    pub mu: f64,
    pub nu: f64,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    pub metric: Metric,
    pub mu_star: f64,
    pub nu_star: f64,
    /// μ scan at the fixed ν, then ν scan at μ*.
    pub cells: Vec<GridCell>,
}

fn eval_cells<T: Scalar>(
    data: &Dataset<T>,
    base: &ExperimentConfig<T>,
    scan: Scan,
    pairs: &[(f64, f64)],
) -> Result<Vec<GridCell>> {
    let run = |&(mu, nu): &(f64, f64)| {
        let cfg = ExperimentConfig { mu: T::c(mu), nu: T::c(nu), ..base.clone() };
        cross_validate(data, &cfg).map(|report| GridCell { scan, mu, nu, report })
    };
    if base.parallel {
        pairs.par_iter().map(run).collect()
    } else {
        pairs.iter().map(run).collect()
    }
}

/// Index of the best cell; ties and undefined values keep the earlier cell.
fn best(cells: &[GridCell], metric: Metric) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in cells.iter().enumerate() {
        let Some(v) = c.report.mean(metric).filter(|v| !v.is_nan()) else { continue };
        let better = match best {
            None => true,
            Some((_, b)) if metric.higher_is_better() => v > b,
            Some((_, b)) => v < b,
        };
        if better {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Two-stage search: scan μ at `nu0`, lock the best μ*, then scan ν at μ*.
pub fn ratio_grid_search<T: Scalar>(
    data: &Dataset<T>,
    base: &ExperimentConfig<T>,
    nu0: f64,
    metric: Metric,
) -> Result<GridSearchResult> {
    let scan = ratio_scan();
    let Some(&nu0) = scan.iter().find(|&&r| (r - nu0).abs() < 1e-9) else {
        return invalid(format!("nu0 must be one of 0.1, 0.2, ..., 1.0 (got {nu0})"));
    };
    let mu_pairs: Vec<_> = scan.iter().map(|&mu| (mu, nu0)).collect();
    let mu_cells = eval_cells(data, base, Scan::Mu, &mu_pairs)?;
    let Some(i) = best(&mu_cells, metric) else {
        return invalid(format!("{metric} undefined on every μ cell"));
    };
    let mu_star = mu_cells[i].mu;
    let nu_pairs: Vec<_> = scan.iter().map(|&nu| (mu_star, nu)).collect();
    let nu_cells = eval_cells(data, base, Scan::Nu, &nu_pairs)?;
    let Some(j) = best(&nu_cells, metric) else {
        return invalid(format!("{metric} undefined on every ν cell"));
    };
    let nu_star = nu_cells[j].nu;
    let mut cells = mu_cells;
    cells.extend(nu_cells);
    Ok(GridSearchResult { metric, mu_star, nu_star, cells })
}

/// Every (μ, ν) pair of the scan set, μ-major.
pub fn full_grid<T: Scalar>(data: &Dataset<T>, base: &ExperimentConfig<T>) -> Result<Vec<GridCell>> {
    let scan = ratio_scan();
    let pairs: Vec<_> = scan.iter().flat_map(|&mu| scan.iter().map(move |&nu| (mu, nu))).collect();
    eval_cells(data, base, Scan::Full, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricSummary;

    fn cell(v: f64) -> GridCell {
        let m = Metric::AveragePrecision;
        GridCell {
            scan: Scan::Mu,
            mu: 0.0,
            nu: 0.0,
            report: EvalReport { summaries: vec![MetricSummary { metric: m, mean: v, std: 0.0, folds: 1, undefined: 0 }] },
        }
    }

    #[test]
    fn scan_set() {
        let s = ratio_scan();
        assert_eq!(s.len(), 10);
        assert_eq!(s[0], 0.1);
        assert_eq!(s[9], 1.0);
        assert_eq!(s[2], 0.3);
    }

    #[test]
    fn ties_prefer_earlier() {
        let cells = vec![cell(0.5), cell(0.7), cell(0.7), cell(f64::NAN)];
        assert_eq!(best(&cells, Metric::AveragePrecision), Some(1));
        let cells = vec![cell(0.1), cell(0.2), cell(0.9)];
        assert_eq!(best(&cells, Metric::AveragePrecision), Some(2));
    }
}
