//! Multi-label datasets: the sparse text format, standardization and fold splits.
//!
//! Format: a header line `N D M`, then one line per instance of the form
//! `<labels> <f:v> <f:v> ...` where `<labels>` is a comma-separated list of
//! 0-based label indices (`-` for the empty set) and each `f:v` pair is a
//! 0-based feature index and its value. Lines starting with `#` are comments.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub y: Matrix<T>,
    pub name: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Matrix<T>, name: impl Into<String>) -> Result<Self> {
        if x.rows() != y.rows() {
            return invalid(format!("{} feature rows but {} label rows", x.rows(), y.rows()));
        }
        if x.rows() == 0 {
            return invalid("dataset has no instances");
        }
        if y.cols() < 2 {
            return invalid(format!("need at least 2 labels, got {}", y.cols()));
        }
        if !x.is_finite() {
            return invalid("non-finite feature value");
        }
        if y.as_slice().iter().any(|&v| v != T::zero() && v != T::one()) {
            return invalid("label matrix entries must be 0 or 1");
        }
        Ok(Dataset { x, y, name: name.into() })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn m(&self) -> usize {
        self.y.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Dataset { x: self.x.select_rows(idx), y: self.y.select_rows(idx), name: self.name.clone() }
    }
}

/// Parses the text format from raw bytes.
pub fn parse_dataset_bytes<T: Scalar>(bytes: &[u8], name: &str) -> Result<Dataset<T>> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| Error::Parse { line: 0, msg: format!("input is not UTF-8: {e}") })?;
    parse_dataset(text, name)
}

pub fn parse_dataset<T: Scalar>(text: &str, name: &str) -> Result<Dataset<T>> {
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());

    let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| perr(hline, format!("bad header token {t:?}"))))
        .collect::<Result<_>>()?;
    let [n, d, m] = dims[..] else {
        return Err(perr(hline, format!("header must be \"N D M\", got {header:?}")));
    };

    let mut x = Matrix::<T>::zeros(n, d);
    let mut y = Matrix::<T>::zeros(n, m);
    let mut count = 0usize;
    let mut last_line = hline;
    for (lineno, line) in lines {
        last_line = lineno;
        if count == n {
            return Err(perr(lineno, format!("more instance lines than declared N={n}")));
        }
        let mut tokens = line.split_whitespace();
        let labels = tokens.next().ok_or_else(|| perr(lineno, "empty instance line".into()))?;
        if labels != "-" {
            for tok in labels.split(',') {
                let l: usize = tok
                    .parse()
                    .map_err(|_| perr(lineno, format!("non-numeric label {tok:?}")))?;
                if l >= m {
                    return Err(perr(lineno, format!("label index {l} ≥ M={m}")));
                }
                y[(count, l)] = T::one();
            }
        }
        let mut seen = vec![false; d];
        for tok in tokens {
            let (f, v) = tok
                .split_once(':')
                .ok_or_else(|| perr(lineno, format!("expected f:v, got {tok:?}")))?;
            let f: usize = f
                .parse()
                .map_err(|_| perr(lineno, format!("non-numeric feature index {f:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| perr(lineno, format!("non-numeric feature value {v:?}")))?;
            if f >= d {
                return Err(perr(lineno, format!("feature index {f} ≥ D={d}")));
            }
            if !v.is_finite() {
                return Err(perr(lineno, format!("non-finite feature value {v}")));
            }
            if seen[f] {
                log::warn!("line {lineno}: duplicate feature index {f}, keeping the last value");
            }
            seen[f] = true;
            x[(count, f)] = T::c(v);
        }
        count += 1;
    }
    if count != n {
        return Err(perr(last_line, format!("header declares N={n} instances, found {count}")));
    }
    Dataset::new(x, y, name).map_err(|e| match e {
        Error::InvalidInput(msg) => perr(hline, msg),
        other => other,
    })
}

/// Writes a dataset in the text format. Zero features are omitted; values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_dataset<T: Scalar>(data: &Dataset<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", data.n(), data.d(), data.m());
    for i in 0..data.n() {
        let labels: Vec<String> = (0..data.m())
            .filter(|&j| data.y[(i, j)] == T::one())
            .map(|j| j.to_string())
            .collect();
        if labels.is_empty() {
            out.push('-');
        } else {
            out.push_str(&labels.join(","));
        }
        for (f, &v) in data.x.row(i).iter().enumerate() {
            if v != T::zero() {
                let _ = write!(out, " {f}:{}", v.as_f64());
            }
        }
        out.push('\n');
    }
    out
}

/// Column-wise standardization fitted on training rows only.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer<T> {
    pub means: Vec<T>,
    pub scales: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    /// Zero-variance columns get scale 1 so they map to 0.
    pub fn fit(x: &Matrix<T>) -> Self {
        let means = crate::linalg::column_means(x);
        let n = T::from_count(x.rows().max(1));
        let mut scales = vec![T::zero(); x.cols()];
        for i in 0..x.rows() {
            for (j, s) in scales.iter_mut().enumerate() {
                let c = x[(i, j)] - means[j];
                *s += c * c;
            }
        }
        for s in scales.iter_mut() {
            let sd = (*s / n).sqrt();
            *s = if sd > T::zero() { sd } else { T::one() };
        }
        Standardizer { means, scales }
    }

    pub fn apply(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.means.len() {
            return invalid(format!("standardizer expects {} columns, got {}", self.means.len(), x.cols()));
        }
        Ok(Matrix::from_fn(x.rows(), x.cols(), |i, j| (x[(i, j)] - self.means[j]) / self.scales[j]))
    }
}

/// Assignment of each instance to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Seeded permutation of `0..n` dealt round-robin into `k` folds.
pub fn split_folds(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return invalid(format!("fold count must be at least 2, got {k}"));
    }
    if k > n {
        return invalid(format!("fold count {k} exceeds instance count {n}"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments })
}
