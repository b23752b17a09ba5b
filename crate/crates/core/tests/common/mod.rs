//! Independent oracles shared by the integration and acceptance tests. None of
//! these call into the library's own numerics.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sca::model::{self, ScaWeights};
use sca::Matrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Textbook `i-j-k` product.
pub fn triple_loop_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Singular values (descending) from nalgebra's full SVD.
pub fn svd_singular_values(y: &Matrix) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(y.rows(), y.cols(), y.as_slice());
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn svd_tail_energy(y: &Matrix, k: usize) -> f64 {
    svd_singular_values(y).iter().skip(k).map(|s| s * s).sum::<f64>().sqrt()
}

/// Minimum total cost over every injective row→column map, by enumeration.
/// Ties resolve to the lexicographically smallest assignment.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    fn go(cost: &[Vec<f64>], row: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        if row == cost.len() {
            let total: f64 = cur.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            if total < best.0 - 1e-12 {
                *best = (total, cur.clone());
            }
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                go(cost, row + 1, used, cur, best);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let cols = cost.first().map_or(0, Vec::len);
    let mut best = (f64::INFINITY, Vec::new());
    go(cost, 0, &mut vec![false; cols], &mut Vec::new(), &mut best);
    best
}

/// Central finite-difference gradient of the total loss.
pub fn fd_gradient(batch: &Matrix, w: &ScaWeights, lambda: f64, eps: f64, h: f64) -> (Matrix, Matrix) {
    let total = |w: &ScaWeights| model::loss(batch, w, lambda, eps).unwrap().total;
    let mut d_enc = Matrix::zeros(w.encoder.rows(), w.encoder.cols());
    for i in 0..w.encoder.rows() {
        for j in 0..w.encoder.cols() {
            let mut p = w.clone();
            p.encoder[(i, j)] += h;
            let mut m = w.clone();
            m.encoder[(i, j)] -= h;
            d_enc[(i, j)] = (total(&p) - total(&m)) / (2.0 * h);
        }
    }
    let mut d_dec = Matrix::zeros(w.decoder.rows(), w.decoder.cols());
    for i in 0..w.decoder.rows() {
        for j in 0..w.decoder.cols() {
            let mut p = w.clone();
            p.decoder[(i, j)] += h;
            let mut m = w.clone();
            m.decoder[(i, j)] -= h;
            d_dec[(i, j)] = (total(&p) - total(&m)) / (2.0 * h);
        }
    }
    (d_enc, d_dec)
}

/// Worst per-coordinate error, counting a coordinate as passing when it is
/// within `abs_floor` absolutely or `rel` relatively.
pub fn worst_relative_error(analytic: &Matrix, numeric: &Matrix, abs_floor: f64) -> f64 {
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(a, n)| {
            let diff = (a - n).abs();
            if diff <= abs_floor {
                0.0
            } else {
                diff / a.abs().max(n.abs())
            }
        })
        .fold(0.0, f64::max)
}

/// Determinant by cofactor expansion (small matrices only).
pub fn cofactor_det(m: &Matrix) -> f64 {
    let n = m.rows();
    if n == 1 {
        return m[(0, 0)];
    }
    (0..n)
        .map(|j| {
            let minor = Matrix::from_fn(n - 1, n - 1, |r, c| m[(r + 1, if c < j { c } else { c + 1 })]);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[(0, j)] * cofactor_det(&minor)
        })
        .sum()
}
