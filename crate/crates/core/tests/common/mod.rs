#![allow(dead_code)]

use cmll::data::Dataset;
use cmll::embedding::random_orthonormal;
use cmll::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type M = Matrix<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> M {
    M::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> M {
    let g = gaussian(n, n, rng);
    M::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

/// Cyclic Jacobi: all eigenvalues (descending) with eigenvectors as columns.
pub fn jacobi_eig(a: &M) -> (Vec<f64>, M) {
    let n = a.rows();
    let mut a = a.clone();
    let mut v = M::identity(n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off < 1e-30 * a.frobenius_sq().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = M::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Top-`k` eigenvectors of a symmetric matrix via the Jacobi oracle.
pub fn jacobi_topk(a: &M, k: usize) -> (Vec<f64>, M) {
    let (vals, vecs) = jacobi_eig(a);
    (vals[..k].to_vec(), vecs.first_cols(k))
}

/// `||U2 - U1 U1^t U2||_F` for orthonormal blocks.
pub fn subspace_gap(u1: &M, u2: &M) -> f64 {
    cmll::linalg::subspace_distance(u1, u2)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Random binary label matrix where each row keeps at least one label with
/// probability `1 - p_empty`.
pub fn random_labels(n: usize, m: usize, density: f64, rng: &mut ChaCha8Rng) -> M {
    M::from_fn(n, m, |_, _| if rng.random::<f64>() < density { 1.0 } else { 0.0 })
}

/// Random dataset with features weakly tied to labels.
pub fn random_dataset(n: usize, d: usize, m: usize, seed: u64) -> Dataset<f64> {
    let mut r = rng(seed);
    let x = gaussian(n, d, &mut r);
    let w = gaussian(d, m, &mut r);
    let s = x.matmul(&w).unwrap();
    let e = gaussian(n, m, &mut r);
    let y = M::from_fn(n, m, |i, j| if s[(i, j)] + e[(i, j)] > 0.5 { 1.0 } else { 0.0 });
    Dataset::new(x, y, "random").unwrap()
}

/// Labels are thresholded linear functions of a 5-dim latent factor; features
/// hide the factor among 45 noise dimensions behind a random rotation.
pub fn latent_task(n: usize, m: usize, seed: u64) -> Dataset<f64> {
    latent_task_scaled(n, m, seed, NOISE_SCALE)
}

/// Standard deviation of the 45 nuisance dimensions (the latent factor has unit scale).
pub const NOISE_SCALE: f64 = 0.5;

pub fn latent_task_scaled(n: usize, m: usize, seed: u64, noise_scale: f64) -> Dataset<f64> {
    const LATENT: usize = 5;
    const NOISE: usize = 45;
    const EPS: f64 = 0.1;
    const TARGET_RATE: f64 = 0.2;
    let mut r = rng(seed);
    let z = gaussian(n, LATENT, &mut r);
    let noise = gaussian(n, NOISE, &mut r).scale(noise_scale);
    let raw = z.hstack(&noise).unwrap();
    let rot: M = random_orthonormal(LATENT + NOISE, LATENT + NOISE, seed ^ 0x5eed);
    let x = raw.matmul(&rot).unwrap().add(&gaussian(n, LATENT + NOISE, &mut r).scale(EPS)).unwrap();
    let w = gaussian(LATENT, m, &mut r);
    let s = z.matmul(&w).unwrap();
    // Per-label offset so that about TARGET_RATE of instances are positive.
    let mut y = M::zeros(n, m);
    for j in 0..m {
        let mut col = s.column(j);
        col.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let cut = col[((TARGET_RATE * n as f64) as usize).min(n - 1)];
        for i in 0..n {
            y[(i, j)] = if s[(i, j)] > cut { 1.0 } else { 0.0 };
        }
    }
    Dataset::new(x, y, "latent").unwrap()
}

/// Brute-force rank of label `l` (1-based): higher scores first, lower index on ties.
pub fn bf_rank(s: &[f64], l: usize) -> usize {
    1 + (0..s.len()).filter(|&j| s[j] > s[l] || (s[j] == s[l] && j < l)).count()
}

fn labeled_rows(y: &M) -> Vec<usize> {
    (0..y.rows()).filter(|&i| y.row(i).iter().any(|&v| v == 1.0)).collect()
}

pub fn bf_average_precision(y: &M, s: &M) -> Option<f64> {
    let rows = labeled_rows(y);
    if rows.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for &i in &rows {
        let (yi, si) = (y.row(i), s.row(i));
        let rel: Vec<usize> = (0..yi.len()).filter(|&l| yi[l] == 1.0).collect();
        let mut acc = 0.0;
        for &l in &rel {
            let rl = bf_rank(si, l);
            let above = rel.iter().filter(|&&k| bf_rank(si, k) <= rl).count();
            acc += above as f64 / rl as f64;
        }
        total += acc / rel.len() as f64;
    }
    Some(total / rows.len() as f64)
}

pub fn bf_ranking_loss(y: &M, s: &M) -> Option<f64> {
    let rows = labeled_rows(y);
    if rows.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for &i in &rows {
        let (yi, si) = (y.row(i), s.row(i));
        let mut bad = 0.0;
        let mut pairs = 0usize;
        for a in 0..yi.len() {
            for b in 0..yi.len() {
                if yi[a] == 1.0 && yi[b] == 0.0 {
                    pairs += 1;
                    if si[a] < si[b] {
                        bad += 1.0;
                    } else if si[a] == si[b] {
                        bad += 0.5;
                    }
                }
            }
        }
        total += if pairs == 0 { 0.0 } else { bad / pairs as f64 };
    }
    Some(total / rows.len() as f64)
}

pub fn bf_one_error(y: &M, s: &M) -> Option<f64> {
    let rows = labeled_rows(y);
    if rows.is_empty() {
        return None;
    }
    let wrong = rows
        .iter()
        .filter(|&&i| {
            let si = s.row(i);
            let top = (0..si.len()).find(|&l| bf_rank(si, l) == 1).unwrap();
            y[(i, top)] != 1.0
        })
        .count();
    Some(wrong as f64 / rows.len() as f64)
}

pub fn bf_micro_f1(y: &M, yhat: &M) -> Option<f64> {
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut fneg = 0.0;
    for i in 0..y.rows() {
        for j in 0..y.cols() {
            match (y[(i, j)] == 1.0, yhat[(i, j)] == 1.0) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fneg += 1.0,
                _ => {}
            }
        }
    }
    let d = 2.0 * tp + fp + fneg;
    (d > 0.0).then(|| 2.0 * tp / d)
}

pub fn bf_precision_at_k(y: &M, s: &M, k: usize) -> f64 {
    let mut total = 0.0;
    for i in 0..y.rows() {
        let si = s.row(i);
        let hits = (0..si.len()).filter(|&l| bf_rank(si, l) <= k && y[(i, l)] == 1.0).count();
        total += hits as f64 / k as f64;
    }
    total / y.rows() as f64
}

pub fn bf_ndcg_at_k(y: &M, s: &M, k: usize) -> Option<f64> {
    let rows = labeled_rows(y);
    if rows.is_empty() {
        return None;
    }
    let mut total = 0.0;
    for &i in &rows {
        let si = s.row(i);
        let mut dcg = 0.0;
        for l in 0..si.len() {
            let r = bf_rank(si, l);
            if r <= k && y[(i, l)] == 1.0 {
                dcg += 1.0 / ((r + 1) as f64).log2();
            }
        }
        let n_rel = y.row(i).iter().filter(|&&v| v == 1.0).count();
        let ideal: f64 = (1..=n_rel.min(k)).map(|r| 1.0 / ((r + 1) as f64).log2()).sum();
        total += dcg / ideal;
    }
    Some(total / rows.len() as f64)
}
