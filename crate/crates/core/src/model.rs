//! The two-layer unmixing network.
//!
//! The encoder `Ẽ` (F×K) maps a pixel spectrum to K pre-activations, a
//! normalized ReLU turns those into abundances on the simplex, and the linear
//! decoder `E` (K×F) mixes the endmember spectra (its rows) back into a
//! spectrum. Training minimizes
//!
//! ```text
//! ‖Y - A E‖_F / √B  +  ‖E Ẽ - I_K‖_F  +  λ |det(Ê Êᵀ)|
//! ```
//!
//! where `Ê` stacks a row of ones on the first K-1 mean-corrected endmembers.
//! Norms are unsquared so the data term is directly comparable with the
//! Eckart-Young tail energy of `Y`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScaError};
use crate::linalg::{self, frobenius_norm, matmul, matmul_nt, matmul_tn, Matrix};

/// Default guard in the normalized ReLU denominator.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Floor applied to a Frobenius norm before it divides a gradient.
const NORM_FLOOR: f64 = 1e-12;
/// Ridge added to the volume Gram matrix before inversion.
const VOLUME_RIDGE: f64 = 1e-12;

/// Encoder and decoder weights: exactly `2FK` parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaWeights {
    /// `Ẽ`, F×K.
    pub encoder: Matrix,
    /// `E`, K×F. Each row is an endmember spectrum.
    pub decoder: Matrix,
}

impl ScaWeights {
    pub fn new(encoder: Matrix, decoder: Matrix) -> Result<Self> {
        let (f, k) = encoder.shape();
        if decoder.shape() != (k, f) {
            return Err(ScaError::contract(format!(
                "encoder is {f}x{k} but decoder is {}x{}, expected {k}x{f}",
                decoder.rows(),
                decoder.cols()
            )));
        }
        if !encoder.is_finite() || !decoder.is_finite() {
            return Err(ScaError::contract("weights contain non-finite entries"));
        }
        Ok(ScaWeights { encoder, decoder })
    }

    /// Number of spectral bands F.
    pub fn bands(&self) -> usize {
        self.encoder.rows()
    }

    /// Number of prescribed endmembers K.
    pub fn members(&self) -> usize {
        self.encoder.cols()
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.as_slice().len() + self.decoder.as_slice().len()
    }

    /// Reorders members: row `i` of the new decoder is row `perm[i]` of the
    /// old one, and encoder columns follow the same map.
    pub fn permuted(&self, perm: &[usize]) -> Result<ScaWeights> {
        let k = self.members();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(ScaError::contract(format!("{perm:?} is not a permutation of 0..{k}")));
        }
        let decoder = self.decoder.select_rows(perm);
        let encoder = Matrix::from_fn(self.bands(), k, |f, i| self.encoder[(f, perm[i])]);
        Ok(ScaWeights { encoder, decoder })
    }

    /// Largest absolute change of any weight.
    pub fn max_abs_diff(&self, other: &ScaWeights) -> f64 {
        self.encoder
            .max_abs_diff(&other.encoder)
            .max(self.decoder.max_abs_diff(&other.decoder))
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.bands() {
            return Err(ScaError::contract(format!(
                "batch has {} bands, weights expect {}",
                batch.cols(),
                self.bands()
            )));
        }
        Ok(())
    }
}

/// Values of each loss term for one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub recon: f64,
    pub biorth: f64,
    pub volume: f64,
    pub total: f64,
    pub lambda: f64,
}

impl LossBreakdown {
    fn new(recon: f64, biorth: f64, volume: f64, lambda: f64) -> Self {
        LossBreakdown {
            recon,
            biorth,
            volume,
            total: recon + biorth + lambda * volume,
            lambda,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.recon.is_finite() && self.biorth.is_finite() && self.volume.is_finite() && self.total.is_finite()
    }
}

/// Gradient of the total loss, shaped like [`ScaWeights`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub d_encoder: Matrix,
    pub d_decoder: Matrix,
}

impl Gradients {
    pub fn zeros_like(w: &ScaWeights) -> Self {
        Gradients {
            d_encoder: Matrix::zeros(w.bands(), w.members()),
            d_decoder: Matrix::zeros(w.members(), w.bands()),
        }
    }

    pub fn norm(&self) -> f64 {
        let e = frobenius_norm(&self.d_encoder);
        let d = frobenius_norm(&self.d_decoder);
        (e * e + d * d).sqrt()
    }
}

/// `max(0, y_k) / (Σ max(0, y) + ε)`.
pub fn normalized_relu(pre_activation: &[f64], epsilon: f64) -> Vec<f64> {
    let mut out = pre_activation.to_vec();
    normalized_relu_in_place(&mut out, epsilon);
    out
}

fn normalized_relu_in_place(row: &mut [f64], epsilon: f64) {
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = v.max(0.0);
        sum += *v;
    }
    let denom = sum + epsilon;
    for v in row.iter_mut() {
        *v /= denom;
    }
}

/// Intermediate values of a forward pass, kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// `batch · Ẽ`, B×K.
    pub pre_activations: Matrix,
    /// Simplex-projected encoder output, B×K.
    pub abundances: Matrix,
    /// `abundances · E`, B×F.
    pub reconstruction: Matrix,
}

pub fn forward_pass(batch: &Matrix, w: &ScaWeights, epsilon: f64) -> Result<ForwardPass> {
    w.check_batch(batch)?;
    let pre_activations = matmul(batch, &w.encoder)?;
    let mut abundances = pre_activations.clone();
    for i in 0..abundances.rows() {
        normalized_relu_in_place(abundances.row_mut(i), epsilon);
    }
    let reconstruction = matmul(&abundances, &w.decoder)?;
    Ok(ForwardPass {
        pre_activations,
        abundances,
        reconstruction,
    })
}

/// Returns `(abundances, reconstruction)` for a batch of pixel spectra.
pub fn forward(batch: &Matrix, w: &ScaWeights, epsilon: f64) -> Result<(Matrix, Matrix)> {
    let fp = forward_pass(batch, w, epsilon)?;
    Ok((fp.abundances, fp.reconstruction))
}

/// `Ê`: a row of ones followed by the mean-corrected endmembers, skipping
/// `dropped`.
fn volume_frame(decoder: &Matrix, dropped: usize) -> Matrix {
    let (k, f) = decoder.shape();
    let mean = column_mean(decoder);
    let mut frame = Matrix::zeros(k, f);
    frame.row_mut(0).fill(1.0);
    let mut r = 1;
    for j in (0..k).filter(|&j| j != dropped) {
        for ((o, &e), &m) in frame.row_mut(r).iter_mut().zip(decoder.row(j)).zip(&mean) {
            *o = e - m;
        }
        r += 1;
    }
    frame
}

fn column_mean(m: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let inv = 1.0 / m.rows() as f64;
    mean.iter_mut().for_each(|v| *v *= inv);
    mean
}

fn check_volume_input(decoder: &Matrix, dropped: usize) -> Result<()> {
    let k = decoder.rows();
    if k < 2 {
        return Err(ScaError::contract(format!("volume needs at least 2 endmembers, got {k}")));
    }
    if k > decoder.cols() {
        return Err(ScaError::contract(format!(
            "volume needs K <= F, got {k} endmembers in {} bands",
            decoder.cols()
        )));
    }
    if dropped >= k {
        return Err(ScaError::contract(format!("dropped row {dropped} out of range for K={k}")));
    }
    Ok(())
}

/// Simplex volume criterion `|det(Ê Êᵀ)|`, using the first K-1 mean-corrected rows.
pub fn volume(decoder: &Matrix) -> Result<f64> {
    volume_dropping(decoder, decoder.rows().saturating_sub(1))
}

/// Same criterion but leaving out mean-corrected row `dropped` instead of the last.
pub fn volume_dropping(decoder: &Matrix, dropped: usize) -> Result<f64> {
    check_volume_input(decoder, dropped)?;
    let frame = volume_frame(decoder, dropped);
    Ok(linalg::det(&matmul_nt(&frame, &frame)?)?.abs())
}

/// Gradient of [`volume`] with respect to the decoder.
///
/// Uses `d|det G| = |det G| tr(G⁻¹ dG)` with a `1e-12` ridge on `G` before
/// inversion. Returns zeros if the ridged Gram is still singular.
pub fn volume_gradient(decoder: &Matrix) -> Result<Matrix> {
    let (k, f) = decoder.shape();
    let dropped = k.saturating_sub(1);
    check_volume_input(decoder, dropped)?;
    let frame = volume_frame(decoder, dropped);
    let mut gram = matmul_nt(&frame, &frame)?;
    let vol = linalg::det(&gram)?.abs();
    let mut grad = Matrix::zeros(k, f);
    if vol == 0.0 {
        return Ok(grad);
    }
    for i in 0..k {
        gram[(i, i)] += VOLUME_RIDGE;
    }
    let gram_inv = match linalg::inverse(&gram) {
        Ok(inv) => inv,
        Err(ScaError::Singular(_)) => return Ok(grad),
        Err(e) => return Err(e),
    };
    // d vol / d Ê = 2 vol G⁻¹ Ê
    let d_frame = matmul(&gram_inv, &frame)?.scaled(2.0 * vol);

    // frame row r+1 is decoder row j minus the mean of all rows
    let mut mean_part = vec![0.0; f];
    let mut r = 1;
    for j in (0..k).filter(|&j| j != dropped) {
        let src = d_frame.row(r);
        for (g, &v) in grad.row_mut(j).iter_mut().zip(src) {
            *g += v;
        }
        for (m, &v) in mean_part.iter_mut().zip(src) {
            *m += v;
        }
        r += 1;
    }
    let inv_k = 1.0 / k as f64;
    for i in 0..k {
        for (g, &m) in grad.row_mut(i).iter_mut().zip(&mean_part) {
            *g -= m * inv_k;
        }
    }
    Ok(grad)
}

/// `E Ẽ - I_K`.
fn biorth_residual(w: &ScaWeights) -> Result<Matrix> {
    let mut m = matmul(&w.decoder, &w.encoder)?;
    for i in 0..w.members() {
        m[(i, i)] -= 1.0;
    }
    Ok(m)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ScaError::contract(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

/// Volume term, or zero when K = 1 (a single endmember spans no simplex).
fn volume_or_zero(decoder: &Matrix) -> Result<f64> {
    if decoder.rows() < 2 {
        Ok(0.0)
    } else {
        volume(decoder)
    }
}

fn breakdown(batch: &Matrix, fp: &ForwardPass, w: &ScaWeights, lambda: f64) -> Result<LossBreakdown> {
    let residual = batch.sub(&fp.reconstruction)?;
    let recon = frobenius_norm(&residual) / (batch.rows().max(1) as f64).sqrt();
    let biorth = frobenius_norm(&biorth_residual(w)?);
    Ok(LossBreakdown::new(recon, biorth, volume_or_zero(&w.decoder)?, lambda))
}

/// Largest simplex deviation of one forward pass: negative entries, and for
/// rows with any positive pre-activation, distance of the row sum from 1.
pub fn simplex_violation(pre_activations: &Matrix, abundances: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for (pre, a) in pre_activations.row_iter().zip(abundances.row_iter()) {
        let min = a.iter().copied().fold(0.0, f64::min);
        worst = worst.max(-min);
        if pre.iter().any(|&p| p > 0.0) {
            worst = worst.max((a.iter().sum::<f64>() - 1.0).abs());
        }
    }
    worst
}

/// Evaluates all loss terms on a batch.
pub fn loss(batch: &Matrix, w: &ScaWeights, lambda: f64, epsilon: f64) -> Result<LossBreakdown> {
    check_lambda(lambda)?;
    let fp = forward_pass(batch, w, epsilon)?;
    breakdown(batch, &fp, w, lambda)
}

/// Analytic gradient of `loss(..).total`.
pub fn backward(batch: &Matrix, w: &ScaWeights, lambda: f64, epsilon: f64) -> Result<Gradients> {
    Ok(loss_and_gradients(batch, w, lambda, epsilon)?.1)
}

/// One forward pass, returning the loss terms together with their gradient.
pub fn loss_and_gradients(
    batch: &Matrix,
    w: &ScaWeights,
    lambda: f64,
    epsilon: f64,
) -> Result<(LossBreakdown, Gradients)> {
    let (losses, grads, _) = batch_step(batch, w, lambda, epsilon)?;
    Ok((losses, grads))
}

/// Loss, gradient and the simplex deviation of the forward pass behind them.
pub(crate) fn batch_step(
    batch: &Matrix,
    w: &ScaWeights,
    lambda: f64,
    epsilon: f64,
) -> Result<(LossBreakdown, Gradients, f64)> {
    check_lambda(lambda)?;
    let fp = forward_pass(batch, w, epsilon)?;
    let b = batch.rows().max(1) as f64;

    // reconstruction: d/dŶ of ‖Y - Ŷ‖/√B
    let residual = batch.sub(&fp.reconstruction)?;
    let residual_norm = frobenius_norm(&residual);
    let d_recon = residual.scaled(-1.0 / (residual_norm.max(NORM_FLOOR) * b.sqrt()));
    let mut d_decoder = matmul_tn(&fp.abundances, &d_recon)?;
    let d_abund = matmul_nt(&d_recon, &w.decoder)?;

    // through the normalized ReLU
    let k = w.members();
    let mut d_pre = Matrix::zeros(batch.rows(), k);
    for n in 0..batch.rows() {
        let pre = fp.pre_activations.row(n);
        let a = fp.abundances.row(n);
        let da = d_abund.row(n);
        let sum: f64 = pre.iter().map(|v| v.max(0.0)).sum();
        let denom = sum + epsilon;
        let inner = linalg::dot(da, a);
        for (j, out) in d_pre.row_mut(n).iter_mut().enumerate() {
            if pre[j] > 0.0 {
                *out = (da[j] - inner) / denom;
            }
        }
    }
    let mut d_encoder = matmul_tn(batch, &d_pre)?;

    // bi-orthogonality
    let m = biorth_residual(w)?;
    let biorth = frobenius_norm(&m);
    let m_unit = m.scaled(1.0 / biorth.max(NORM_FLOOR));
    d_decoder = d_decoder.add(&matmul_nt(&m_unit, &w.encoder)?)?;
    d_encoder = d_encoder.add(&matmul_tn(&w.decoder, &m_unit)?)?;

    let vol = volume_or_zero(&w.decoder)?;
    if lambda > 0.0 && k >= 2 {
        d_decoder = d_decoder.add(&volume_gradient(&w.decoder)?.scaled(lambda))?;
    }

    let losses = LossBreakdown::new(residual_norm / b.sqrt(), biorth, vol, lambda);
    let violation = simplex_violation(&fp.pre_activations, &fp.abundances);
    Ok((losses, Gradients { d_encoder, d_decoder }, violation))
}
