//! Hyperspectral datasets: the pixel-by-band matrix, its `[0, 1]` scaling,
//! synthetic ground truth, and noise / outlier corruption.

pub mod hsx;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScaError};
use crate::linalg::{self, matmul, Matrix};
use crate::metrics;

pub use hsx::{load_csv, load_hsx, read_matrix_csv, save_hsx, write_matrix_csv};

/// Raster size of an image whose pixels are stored row-major in `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
}

/// Global affine scaling record: `y_s = (y - y_min) / (y_max - y_min)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub y_min: f64,
    pub y_max: f64,
}

impl ScaleParams {
    pub fn range(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.y_max > self.y_min) || !self.y_min.is_finite() || !self.y_max.is_finite() {
            return Err(ScaError::Degenerate(format!(
                "scale range [{}, {}] is empty",
                self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    /// Applies the forward map to any matrix in original units.
    pub fn apply(&self, m: &Matrix) -> Matrix {
        let range = self.range();
        let mut out = m.clone();
        out.as_mut_slice()
            .iter_mut()
            .for_each(|v| *v = (*v - self.y_min) / range);
        out
    }
}

/// Pixel-by-band reflectance matrix with optional raster geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct HsiDataset {
    /// N×F, one pixel spectrum per row.
    pub y: Matrix,
    pub raster: Option<Raster>,
    pub wavelengths: Option<Vec<f64>>,
    /// Set once the data has been mapped to `[0, 1]`.
    pub scale: Option<ScaleParams>,
}

impl HsiDataset {
    /// Wraps a nonnegative N×F matrix.
    pub fn new(y: Matrix) -> Result<Self> {
        if let Some(pos) = y.as_slice().iter().position(|&v| v < 0.0) {
            let cols = y.cols().max(1);
            return Err(ScaError::contract(format!(
                "negative reflectance at pixel {}, band {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(HsiDataset {
            y,
            raster: None,
            wavelengths: None,
            scale: None,
        })
    }

    pub fn with_raster(mut self, width: usize, height: usize) -> Result<Self> {
        if width.checked_mul(height) != Some(self.pixels()) {
            return Err(ScaError::contract(format!(
                "raster {width}x{height} does not hold {} pixels",
                self.pixels()
            )));
        }
        self.raster = Some(Raster { width, height });
        Ok(self)
    }

    pub fn with_wavelengths(mut self, wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != self.bands() {
            return Err(ScaError::contract(format!(
                "{} wavelengths for {} bands",
                wavelengths.len(),
                self.bands()
            )));
        }
        self.wavelengths = Some(wavelengths);
        Ok(self)
    }

    pub fn pixels(&self) -> usize {
        self.y.rows()
    }

    pub fn bands(&self) -> usize {
        self.y.cols()
    }

    /// Maps all entries to `[0, 1]` using the global min and max.
    ///
    /// Scaling already-scaled data composes the two records, so
    /// [`unscale_endmembers`] still returns original units.
    pub fn scale(&self) -> Result<HsiDataset> {
        let data = self.y.as_slice();
        let y_min = data.iter().copied().fold(f64::INFINITY, f64::min);
        let y_max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let params = ScaleParams { y_min, y_max };
        params
            .validate()
            .map_err(|_| ScaError::Degenerate(format!("constant dataset (all entries {y_min})")))?;
        let y = params.apply(&self.y);
        let scale = match self.scale {
            None => params,
            Some(prev) => ScaleParams {
                y_min: prev.y_min + y_min * prev.range(),
                y_max: prev.y_min + y_max * prev.range(),
            },
        };
        Ok(HsiDataset {
            y,
            raster: self.raster,
            wavelengths: self.wavelengths.clone(),
            scale: Some(scale),
        })
    }

    /// Returns a copy in original units if this dataset was scaled.
    pub fn unscaled(&self) -> HsiDataset {
        match self.scale {
            None => self.clone(),
            Some(p) => HsiDataset {
                y: unscale_endmembers(&self.y, &p),
                raster: self.raster,
                wavelengths: self.wavelengths.clone(),
                scale: None,
            },
        }
    }
}

/// `e_s (y_max - y_min) + y_min`, entry-wise. Abundances need no counterpart.
pub fn unscale_endmembers(e_scaled: &Matrix, p: &ScaleParams) -> Matrix {
    let range = p.range();
    let mut out = e_scaled.clone();
    out.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = *v * range + p.y_min);
    out
}

/// Known endmembers and abundances behind a dataset, in original units.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// K×F.
    pub endmembers: Matrix,
    /// N×K, rows on the simplex.
    pub abundances: Matrix,
}

impl GroundTruth {
    pub fn new(endmembers: Matrix, abundances: Matrix) -> Result<Self> {
        if endmembers.rows() != abundances.cols() {
            return Err(ScaError::contract(format!(
                "{} endmembers but {} abundance columns",
                endmembers.rows(),
                abundances.cols()
            )));
        }
        for (i, row) in abundances.row_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&a| a < 0.0) || (sum - 1.0).abs() > 1e-9 {
                return Err(ScaError::contract(format!(
                    "abundance row {i} is off the simplex (sum {sum})"
                )));
            }
        }
        Ok(GroundTruth { endmembers, abundances })
    }

    pub fn members(&self) -> usize {
        self.endmembers.rows()
    }
}

/// Zero-mean white Gaussian noise at a target SNR. `f64::INFINITY` means no noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub snr_db: f64,
    pub seed: u64,
}

/// Replace `count` random pixels with uniform random spectra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub count: usize,
    pub seed: u64,
}

/// Minimum pairwise spectral angle between generated endmembers.
const MIN_ENDMEMBER_SAD: f64 = 0.15;
const MAX_GENERATOR_ATTEMPTS: usize = 1000;

/// Noiseless synthetic scene `y = A E` with known ground truth.
///
/// Endmembers are sums of 3–5 Gaussian bumps, kept in `[0, 1]` and at least
/// 0.15 rad apart. Abundance rows are Dirichlet(1, …, 1); for every endmember
/// one random pixel is then replaced by a near-vertex mixture with weight
/// `purity` on that endmember, so `purity = 1` plants an exact pure pixel.
pub fn synth_generate(k: usize, f: usize, n: usize, seed: u64, purity: f64) -> Result<(HsiDataset, GroundTruth)> {
    if k == 0 {
        return Err(ScaError::contract("k must be at least 1"));
    }
    if k > f {
        return Err(ScaError::contract(format!("k exceeds f ({k} > {f})")));
    }
    if n < k {
        return Err(ScaError::contract(format!("n must be at least k ({n} < {k})")));
    }
    if !(purity > 0.0 && purity <= 1.0) {
        return Err(ScaError::contract(format!("purity must lie in (0, 1], got {purity}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let endmembers = generate_endmembers(k, f, &mut rng)?;

    let mut abundances = Matrix::zeros(n, k);
    for i in 0..n {
        let row = abundances.row_mut(i);
        for a in row.iter_mut() {
            // Exp(1) draws normalized to a Dirichlet(1, …, 1) sample
            let u: f64 = rng.random();
            *a = -(1.0 - u).ln();
        }
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|a| *a /= sum);
    }
    let off_vertex = if k > 1 { (1.0 - purity) / (k - 1) as f64 } else { 0.0 };
    for (member, pixel) in index::sample(&mut rng, n, k).into_iter().enumerate() {
        let row = abundances.row_mut(pixel);
        row.fill(off_vertex);
        row[member] = if k > 1 { purity } else { 1.0 };
    }

    let y = matmul(&abundances, &endmembers)?;
    let (width, height) = near_square(n);
    let data = HsiDataset::new(y)?.with_raster(width, height)?;
    Ok((data, GroundTruth { endmembers, abundances }))
}

fn generate_endmembers(k: usize, f: usize, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    for _ in 0..MAX_GENERATOR_ATTEMPTS {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut attempts = 0;
        while rows.len() < k && attempts < MAX_GENERATOR_ATTEMPTS {
            attempts += 1;
            let candidate = smooth_spectrum(f, rng);
            let distinct = rows
                .iter()
                .all(|r| metrics::sad(r, &candidate).is_ok_and(|a| a >= MIN_ENDMEMBER_SAD));
            if distinct {
                rows.push(candidate);
            }
        }
        if rows.len() < k {
            break;
        }
        let e = Matrix::from_rows(&rows)?;
        if linalg::right_pseudo_inverse(&e).is_ok() {
            return Ok(e);
        }
    }
    Err(ScaError::Generator(format!(
        "could not draw {k} distinct endmembers over {f} bands; try another seed"
    )))
}

fn smooth_spectrum(f: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bumps = rng.random_range(3..=5);
    let span = f as f64;
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            let amp = rng.random_range(0.2..1.0);
            let center = rng.random_range(0.0..span);
            let width = rng.random_range(span / 20.0..span / 4.0).max(0.5);
            (amp, center, width)
        })
        .collect();
    let baseline = rng.random_range(0.02..0.1);
    let mut spectrum: Vec<f64> = (0..f)
        .map(|b| {
            let x = b as f64;
            baseline
                + params
                    .iter()
                    .map(|&(a, c, w)| a * (-0.5 * ((x - c) / w).powi(2)).exp())
                    .sum::<f64>()
        })
        .collect();
    let peak = spectrum.iter().copied().fold(0.0, f64::max);
    let target = rng.random_range(0.5..1.0);
    spectrum.iter_mut().for_each(|v| *v *= target / peak);
    spectrum
}

/// Largest `height <= √n` dividing `n`, paired with `width = n / height`.
fn near_square(n: usize) -> (usize, usize) {
    let mut height = (n as f64).sqrt() as usize;
    while height > 1 && n % height != 0 {
        height -= 1;
    }
    let height = height.max(1);
    (n / height, height)
}

/// Adds white Gaussian noise with `σ² = mean(y²) / 10^(snr_db/10)`, clamping
/// negative results to zero.
pub fn add_noise(data: &HsiDataset, cfg: &NoiseConfig) -> Result<HsiDataset> {
    if cfg.snr_db.is_nan() || cfg.snr_db == f64::NEG_INFINITY {
        return Err(ScaError::contract(format!("invalid SNR {}", cfg.snr_db)));
    }
    if cfg.snr_db == f64::INFINITY {
        return Ok(data.clone());
    }
    let values = data.y.as_slice();
    let power = values.iter().map(|v| v * v).sum::<f64>() / values.len().max(1) as f64;
    let sigma = (power / 10f64.powf(cfg.snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = data.clone();
    for v in out.y.as_mut_slice() {
        let noise: f64 = rng.sample(StandardNormal);
        *v = (*v + sigma * noise).max(0.0);
    }
    Ok(out)
}

/// Replaces `cfg.count` distinct random pixels with `U[0, 1)` spectra and
/// returns their indices in ascending order.
pub fn add_outliers(data: &HsiDataset, cfg: &OutlierConfig) -> Result<(HsiDataset, Vec<usize>)> {
    let n = data.pixels();
    if cfg.count > n {
        return Err(ScaError::contract(format!("{} outliers requested for {n} pixels", cfg.count)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picked = index::sample(&mut rng, n, cfg.count).into_vec();
    picked.sort_unstable();
    let mut out = data.clone();
    for &i in &picked {
        for v in out.y.row_mut(i) {
            *v = rng.random::<f64>();
        }
    }
    Ok((out, picked))
}

/// Realized SNR in dB of `noisy` against `clean`.
pub fn realized_snr_db(clean: &Matrix, noisy: &Matrix) -> Result<f64> {
    let diff = noisy.sub(clean)?;
    let signal = linalg::frobenius_norm(clean);
    let noise = linalg::frobenius_norm(&diff);
    Ok(20.0 * (signal / noise).log10())
}
