//! Dense row-major linear algebra.
//!
//! Just the kernels the unmixing model needs: products, norms, LU
//! determinant and inverse, a cyclic Jacobi symmetric eigensolver, truncated
//! singular values with the matching Eckart-Young tail energy, and the right
//! pseudo-inverse of a wide full-row-rank matrix.
//!
//! Everything is `f64`, single threaded, and sums in a fixed order so results
//! are bitwise reproducible.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Result, ScaError};

/// Relative off-diagonal mass at which the Jacobi sweep stops.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
/// Largest 1-norm condition estimate accepted by [`right_pseudo_inverse`].
const MAX_CONDITION: f64 = 1e12;

/// Row-major dense matrix of finite `f64` values.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Wraps a row-major buffer. Rejects length mismatches and non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| ScaError::contract(format!("{rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(ScaError::contract(format!(
                "buffer of length {} cannot form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(ScaError::contract(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(ScaError::contract(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the listed rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Entry-wise `self - other`.
    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    /// Entry-wise `self + other`.
    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    fn zip_with(&self, other: &Matrix, op: &str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(ScaError::contract(format!(
                "{op}: shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in self.row_iter().take(8) {
            writeln!(f, "  {r:?}")?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// `a * b`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(ScaError::contract(format!(
            "matmul: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (l, &a_il) in a_row.iter().enumerate() {
            if a_il == 0.0 {
                continue;
            }
            for (o, &b_lj) in out_row.iter_mut().zip(b.row(l)) {
                *o += a_il * b_lj;
            }
        }
    }
    Ok(out)
}

/// `aᵀ * b` without materializing the transpose.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows != b.rows {
        return Err(ScaError::contract(format!(
            "matmul_tn: ({}x{})ᵀ times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.cols, b.cols);
    for n in 0..a.rows {
        let b_row = b.row(n);
        for (i, &a_ni) in a.row(n).iter().enumerate() {
            if a_ni == 0.0 {
                continue;
            }
            let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, &b_nj) in out_row.iter_mut().zip(b_row) {
                *o += a_ni * b_nj;
            }
        }
    }
    Ok(out)
}

/// `a * bᵀ` without materializing the transpose.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(ScaError::contract(format!(
            "matmul_nt: {}x{} times ({}x{})ᵀ",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(Matrix::from_fn(a.rows, b.rows, |i, j| dot(a.row(i), b.row(j))))
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// LU factorization with partial pivoting. Returns the packed factors, the
/// row permutation and its parity, or `None` if a pivot is exactly zero.
struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

fn lu_decompose(g: &Matrix) -> Option<Lu> {
    let n = g.rows;
    let mut lu = g.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| lu[(a, col)].abs().total_cmp(&lu[(b, col)].abs()))
            .unwrap_or(col);
        if lu[(pivot, col)] == 0.0 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                lu.data.swap(col * n + j, pivot * n + j);
            }
            perm.swap(col, pivot);
            sign = -sign;
        }
        let p = lu[(col, col)];
        for r in col + 1..n {
            let factor = lu[(r, col)] / p;
            lu[(r, col)] = factor;
            if factor != 0.0 {
                for j in col + 1..n {
                    let u = lu[(col, j)];
                    lu[(r, j)] -= factor * u;
                }
            }
        }
    }
    Some(Lu { lu, perm, sign })
}

fn require_square(g: &Matrix, op: &str) -> Result<()> {
    if g.rows != g.cols {
        return Err(ScaError::contract(format!(
            "{op}: matrix is {}x{}, not square",
            g.rows, g.cols
        )));
    }
    Ok(())
}

/// Determinant via pivoted LU. The sign is exact with respect to pivoting.
pub fn det(g: &Matrix) -> Result<f64> {
    require_square(g, "det")?;
    Ok(match lu_decompose(g) {
        None => 0.0,
        Some(Lu { lu, sign, .. }) => (0..g.rows).fold(sign, |acc, i| acc * lu[(i, i)]),
    })
}

/// Inverse via pivoted LU.
pub fn inverse(g: &Matrix) -> Result<Matrix> {
    require_square(g, "inverse")?;
    let n = g.rows;
    let Lu { lu, perm, .. } =
        lu_decompose(g).ok_or_else(|| ScaError::Singular(format!("{n}x{n} matrix has a zero pivot")))?;
    let mut inv = Matrix::zeros(n, n);
    let mut x = vec![0.0; n];
    for c in 0..n {
        // forward substitution on the permuted unit vector
        for i in 0..n {
            let mut v = if perm[i] == c { 1.0 } else { 0.0 };
            for j in 0..i {
                v -= lu[(i, j)] * x[j];
            }
            x[i] = v;
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for j in i + 1..n {
                v -= lu[(i, j)] * x[j];
            }
            x[i] = v / lu[(i, i)];
        }
        for i in 0..n {
            inv[(i, c)] = x[i];
        }
    }
    if !inv.is_finite() {
        return Err(ScaError::Singular(format!("{n}x{n} inverse overflowed")));
    }
    Ok(inv)
}

fn norm_1(g: &Matrix) -> f64 {
    (0..g.cols)
        .map(|j| (0..g.rows).map(|i| g[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigensolver for symmetric input.
///
/// Sweeps until the off-diagonal Frobenius mass falls below `1e-12 * ‖s‖_F`.
/// Only the upper triangle is trusted; the matrix is symmetrized first.
pub fn symmetric_eigen(s: &Matrix) -> Result<SymmetricEigen> {
    require_square(s, "symmetric_eigen")?;
    let n = s.rows;
    let mut a = Matrix::from_fn(n, n, |i, j| if i <= j { s[(i, j)] } else { s[(j, i)] });
    let mut v = Matrix::identity(n);
    let scale = frobenius_norm(&a);
    let tol = JACOBI_TOL * scale;

    let mut converged = scale == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let off = off_diagonal_norm(&a);
        if off <= tol {
            converged = true;
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
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate_columns(&mut a, p, q, c, sn);
                rotate_rows(&mut a, p, q, c, sn);
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                rotate_columns(&mut v, p, q, c, sn);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(ScaError::Degenerate(format!(
            "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

fn rotate_columns(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.rows {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..m.cols {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
}

/// `yᵀy`, accumulated row by row.
pub fn gram_cols(y: &Matrix) -> Matrix {
    let c = y.cols;
    let mut g = Matrix::zeros(c, c);
    for row in y.row_iter() {
        for i in 0..c {
            let yi = row[i];
            if yi == 0.0 {
                continue;
            }
            for j in i..c {
                g.data[i * c + j] += yi * row[j];
            }
        }
    }
    for i in 0..c {
        for j in 0..i {
            g.data[i * c + j] = g.data[j * c + i];
        }
    }
    g
}

/// Singular values of `y`, all `min(rows, cols)` of them, paired with the
/// order of the Gram eigenvalues (largest first).
///
/// Singular directions come from a Jacobi eigendecomposition of the smaller
/// Gram matrix. Each value is then measured directly as `‖y v‖` (or `‖yᵀ u‖`)
/// instead of `sqrt(λ)`, which keeps values near zero accurate to working
/// precision rather than to its square root.
fn singular_spectrum(y: &Matrix) -> Result<Vec<f64>> {
    if y.cols <= y.rows {
        let eig = symmetric_eigen(&gram_cols(y))?;
        let projected = matmul(y, &eig.vectors)?;
        Ok(column_norms(&projected))
    } else {
        let eig = symmetric_eigen(&matmul_nt(y, y)?)?;
        let projected = matmul_tn(&eig.vectors, y)?;
        Ok(projected.row_iter().map(|r| dot(r, r).sqrt()).collect())
    }
}

fn column_norms(m: &Matrix) -> Vec<f64> {
    let mut sq = vec![0.0; m.cols];
    for row in m.row_iter() {
        for (s, v) in sq.iter_mut().zip(row) {
            *s += v * v;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

fn check_rank_arg(y: &Matrix, k: usize, op: &str) -> Result<()> {
    let max = y.rows.min(y.cols);
    if k == 0 || k > max {
        return Err(ScaError::contract(format!(
            "{op}: k={k} outside 1..={max} for a {}x{} matrix",
            y.rows, y.cols
        )));
    }
    Ok(())
}

/// The `k` largest singular values of `y`, descending.
pub fn top_k_singular_values(y: &Matrix, k: usize) -> Result<Vec<f64>> {
    check_rank_arg(y, k, "top_k_singular_values")?;
    let mut sigma = singular_spectrum(y)?;
    sigma.sort_by(|a, b| b.total_cmp(a));
    sigma.truncate(k);
    Ok(sigma)
}

/// Frobenius residual of the best rank-`k` approximation of `y`:
/// `sqrt(Σ_{i>k} σ_i²)`, the lower bound on `‖y - ŷ‖_F` for any rank-`k` `ŷ`.
///
/// Computed as the norm of `y` projected onto the trailing Gram
/// eigenvectors, so the rank-`k` reconstruction is never formed and exact
/// low-rank data reports a tail at round-off level.
pub fn tail_energy(y: &Matrix, k: usize) -> Result<f64> {
    check_rank_arg(y, k, "tail_energy")?;
    let sigma = singular_spectrum(y)?;
    Ok(sigma[k..].iter().map(|s| s * s).sum::<f64>().sqrt())
}

/// Right pseudo-inverse `eᵀ(e eᵀ)⁻¹` of a wide matrix with full row rank.
pub fn right_pseudo_inverse(e: &Matrix) -> Result<Matrix> {
    if e.rows > e.cols {
        return Err(ScaError::contract(format!(
            "right_pseudo_inverse: {}x{} is taller than wide",
            e.rows, e.cols
        )));
    }
    let g = matmul_nt(e, e)?;
    let g_inv = inverse(&g)?;
    let cond = norm_1(&g) * norm_1(&g_inv);
    if !(cond <= MAX_CONDITION) {
        return Err(ScaError::Singular(format!(
            "e eᵀ condition estimate {cond:.3e} exceeds {MAX_CONDITION:e}"
        )));
    }
    matmul_tn(e, &g_inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn matmul_identity_and_selector() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &a).unwrap(), a);
        let r = matmul(&m(&[&[1.0, 0.0]]), &m(&[&[5.0], &[7.0]])).unwrap();
        assert_eq!(r.as_slice(), &[5.0]);
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3 times 2x3"), "{msg}");
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&Matrix::zeros(2, 2)), 0.0);
        assert!((frobenius_norm(&Matrix::identity(2)) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius_norm(&m(&[&[3.0, 4.0]])), 5.0);
    }

    #[test]
    fn det_examples() {
        assert_eq!(det(&Matrix::identity(3)).unwrap(), 1.0);
        assert_eq!(det(&m(&[&[2.0, 0.0], &[0.0, 3.0]])).unwrap(), 6.0);
        assert_eq!(det(&m(&[&[1.0, 2.0], &[2.0, 4.0]])).unwrap(), 0.0);
        assert!(det(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn det_row_swap_flips_sign() {
        let a = m(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let swapped = a.select_rows(&[1, 0, 2]);
        let d = det(&a).unwrap();
        assert!((det(&swapped).unwrap() + d).abs() < 1e-12);
        assert!((d - (-5.0)).abs() < 1e-12, "{d}");
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(&[&[4.0, 1.0, 0.5], &[1.0, 3.0, 0.2], &[0.5, 0.2, 2.0]]);
        let inv = inverse(&a).unwrap();
        let prod = matmul(&a, &inv).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn singular_values_examples() {
        assert_eq!(top_k_singular_values(&Matrix::identity(3), 2).unwrap(), vec![1.0, 1.0]);
        let mut y = Matrix::zeros(4, 3);
        y[(0, 0)] = 1.0;
        y[(1, 1)] = 3.0;
        y[(3, 2)] = 2.0;
        let s = top_k_singular_values(&y, 3).unwrap();
        for (got, want) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!(top_k_singular_values(&y, 0).is_err());
        assert!(top_k_singular_values(&y, 4).is_err());
    }

    #[test]
    fn wide_input_uses_row_gram() {
        let y = m(&[&[3.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 4.0, 0.0]]);
        let s = top_k_singular_values(&y, 2).unwrap();
        assert!((s[0] - 4.0).abs() < 1e-14 && (s[1] - 3.0).abs() < 1e-14);
        assert!(tail_energy(&y, 2).unwrap() < 1e-14);
        assert!((tail_energy(&y, 1).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tail_energy_identity() {
        assert!((tail_energy(&Matrix::identity(3), 2).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pseudo_inverse_examples() {
        let e = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let p = right_pseudo_inverse(&e).unwrap();
        assert_eq!(p, m(&[&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]]));
        let p = right_pseudo_inverse(&m(&[&[2.0, 0.0]])).unwrap();
        assert_eq!(p, m(&[&[0.5], &[0.0]]));
    }

    #[test]
    fn pseudo_inverse_rejects_rank_deficiency() {
        let e = m(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]);
        assert!(matches!(right_pseudo_inverse(&e), Err(ScaError::Singular(_))));
        let tall = Matrix::zeros(3, 2);
        assert!(matches!(right_pseudo_inverse(&tall), Err(ScaError::Contract(_))));
    }

    #[test]
    fn from_vec_rejects_nan_and_bad_length() {
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_vec(2, 2, vec![1.0]).is_err());
    }
}
