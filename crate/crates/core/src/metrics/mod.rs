//! Unmixing quality metrics and evaluation reports.

pub mod assignment;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::Serialize;

use crate::data::{unscale_endmembers, GroundTruth, HsiDataset, ScaleParams};
use crate::error::{Result, ScaError};
use crate::linalg::{dot, Matrix};
use crate::model::{self, ScaWeights};

/// Default `max_n a[n, k]` below which member `k` counts as unused.
pub const DEFAULT_NULL_THRESHOLD: f64 = 1e-3;
/// Tolerance on decoder entries outside `[0, 1]` in scaled units.
const RANGE_TOLERANCE: f64 = 1e-6;

/// Spectral angle in radians between two spectra.
pub fn sad(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(ScaError::contract(format!("sad: lengths {} and {}", x.len(), y.len())));
    }
    let nx = dot(x, x).sqrt();
    let ny = dot(y, y).sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(ScaError::Degenerate("sad of a zero vector".into()));
    }
    Ok((dot(x, y) / (nx * ny)).clamp(-1.0, 1.0).acos())
}

/// `sqrt(‖x - y‖² / N)` with N the element count.
pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(ScaError::contract(format!("rmse: lengths {} and {}", x.len(), y.len())));
    }
    if x.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sq / x.len() as f64).sqrt())
}

fn sad_cost(extracted: &Matrix, truth: &Matrix) -> Vec<Vec<f64>> {
    truth
        .row_iter()
        .map(|t| extracted.row_iter().map(|e| sad(t, e).unwrap_or(PI)).collect())
        .collect()
}

/// Matches every ground-truth endmember to a distinct extracted one with
/// minimum total SAD. Returns `truth row -> extracted row`.
///
/// Among equal-cost optima the lowest extracted index wins, ground-truth row
/// by row.
pub fn align_endmembers(extracted: &Matrix, truth: &Matrix) -> Result<Vec<usize>> {
    if extracted.rows() < truth.rows() {
        return Err(ScaError::contract(format!(
            "cannot align {} extracted members to {} ground-truth members",
            extracted.rows(),
            truth.rows()
        )));
    }
    if extracted.cols() != truth.cols() {
        return Err(ScaError::contract(format!(
            "extracted spectra have {} bands, truth has {}",
            extracted.cols(),
            truth.cols()
        )));
    }
    Ok(assignment::solve_lexicographic(&sad_cost(extracted, truth)))
}

/// Members whose abundance never reaches `threshold`.
pub fn detect_null_members(a: &Matrix, threshold: f64) -> Vec<usize> {
    (0..a.cols())
        .filter(|&k| a.row_iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max) < threshold)
        .collect()
}

/// Published per-dataset averages for comparison; never recomputed here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PublishedReference {
    pub dataset: &'static str,
    pub rmse_y: f64,
    pub rmse_e: f64,
    pub sad_e: f64,
    pub rmse_a: f64,
}

pub const SAMSON_REFERENCE: PublishedReference = PublishedReference {
    dataset: "Samson",
    rmse_y: 0.29e-4,
    rmse_e: 0.48e-5,
    sad_e: 1.69e-4,
    rmse_a: 1.18e-5,
};

pub const JASPER_REFERENCE: PublishedReference = PublishedReference {
    dataset: "Jasper",
    rmse_y: 1.82e-4,
    rmse_e: 2.24e-5,
    sad_e: 2.62e-4,
    rmse_a: 3.34e-5,
};

pub const URBAN_REFERENCE: PublishedReference = PublishedReference {
    dataset: "Urban",
    rmse_y: 0.04e-4,
    rmse_e: 0.13e-5,
    sad_e: 1.43e-4,
    rmse_a: 1.56e-5,
};

pub fn published_reference(name: &str) -> Option<PublishedReference> {
    [SAMSON_REFERENCE, JASPER_REFERENCE, URBAN_REFERENCE]
        .into_iter()
        .find(|r| r.dataset.eq_ignore_ascii_case(name))
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub epsilon: f64,
    pub null_threshold: f64,
    /// Pixels left out of every metric (e.g. injected outliers).
    pub mask: Vec<usize>,
    pub reference: Option<PublishedReference>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            epsilon: model::DEFAULT_EPSILON,
            null_threshold: DEFAULT_NULL_THRESHOLD,
            mask: Vec::new(),
            reference: None,
        }
    }
}

/// Scores a trained network against ground truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    /// For every extracted member, the ground-truth member it was matched to.
    pub permutation: Vec<Option<usize>>,
    /// Ground-truth indices of the matched pairs, ascending.
    pub matched_truth: Vec<usize>,
    /// SAD (radians) per matched pair, in `matched_truth` order.
    pub sad_per_member: Vec<f64>,
    /// RMSE over each matched abundance column, in `matched_truth` order.
    pub rmse_a_per_member: Vec<f64>,
    pub rmse_a: f64,
    pub rmse_e: f64,
    pub rmse_y: f64,
    pub sad_mean: f64,
    pub null_members: Vec<usize>,
    pub decoder_range_violations: usize,
    pub biorth: f64,
    pub volume: f64,
    pub evaluated_pixels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PublishedReference>,
}

/// What can be measured without ground truth.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnsupervisedReport {
    pub rmse_y: f64,
    pub biorth: f64,
    pub volume: f64,
    pub null_members: Vec<usize>,
    pub decoder_range_violations: usize,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "members,matched,sad_mean,rmse_a,rmse_e,rmse_y,null_members,decoder_range_violations";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{:e},{},{}",
            self.permutation.len(),
            self.matched_truth.len(),
            self.sad_mean,
            self.rmse_a,
            self.rmse_e,
            self.rmse_y,
            self.null_members.len(),
            self.decoder_range_violations
        )
    }

    pub fn max_sad(&self) -> f64 {
        self.sad_per_member.iter().copied().fold(0.0, f64::max)
    }
}

struct Scored {
    scaled_y: Matrix,
    original_y: Matrix,
    params: ScaleParams,
    abundances: Matrix,
    reconstruction: Matrix,
    keep: Vec<usize>,
    null_members: Vec<usize>,
    decoder_range_violations: usize,
}

fn score(weights: &ScaWeights, data: &HsiDataset, opts: &EvalOptions) -> Result<Scored> {
    if weights.bands() != data.bands() {
        return Err(ScaError::contract(format!(
            "weights expect {} bands, data has {}",
            weights.bands(),
            data.bands()
        )));
    }
    let (scaled_y, params, original_y) = match data.scale {
        Some(p) => (data.y.clone(), p, data.unscaled().y),
        None => {
            let s = data.scale()?;
            let p = s.scale.expect("scale() records its parameters");
            (s.y, p, data.y.clone())
        }
    };
    let (abundances, reconstruction) = model::forward(&scaled_y, weights, opts.epsilon)?;
    let masked: BTreeSet<usize> = opts.mask.iter().copied().collect();
    let keep: Vec<usize> = (0..data.pixels()).filter(|i| !masked.contains(i)).collect();
    if keep.is_empty() {
        return Err(ScaError::Evaluation("every pixel is masked".into()));
    }
    let null_members = detect_null_members(&abundances.select_rows(&keep), opts.null_threshold);
    let decoder_range_violations = weights
        .decoder
        .as_slice()
        .iter()
        .filter(|&&v| !(-RANGE_TOLERANCE..=1.0 + RANGE_TOLERANCE).contains(&v))
        .count();
    Ok(Scored {
        scaled_y,
        original_y,
        params,
        abundances,
        reconstruction,
        keep,
        null_members,
        decoder_range_violations,
    })
}

fn rmse_y(s: &Scored) -> Result<f64> {
    let recon = unscale_endmembers(&s.reconstruction.select_rows(&s.keep), &s.params);
    rmse(s.original_y.select_rows(&s.keep).as_slice(), recon.as_slice())
}

fn weight_terms(weights: &ScaWeights, s: &Scored) -> Result<(f64, f64)> {
    let l = model::loss(&s.scaled_y, weights, 0.0, model::DEFAULT_EPSILON)?;
    Ok((l.biorth, l.volume))
}

pub fn evaluate_unsupervised(weights: &ScaWeights, data: &HsiDataset, opts: &EvalOptions) -> Result<UnsupervisedReport> {
    let s = score(weights, data, opts)?;
    let (biorth, volume) = weight_terms(weights, &s)?;
    Ok(UnsupervisedReport {
        rmse_y: rmse_y(&s)?,
        biorth,
        volume,
        null_members: s.null_members,
        decoder_range_violations: s.decoder_range_violations,
    })
}

/// [`evaluate_with`] using default options and the given ReLU guard.
pub fn evaluate(weights: &ScaWeights, data: &HsiDataset, gt: &GroundTruth, epsilon: f64) -> Result<EvalReport> {
    evaluate_with(
        weights,
        data,
        gt,
        &EvalOptions {
            epsilon,
            ..EvalOptions::default()
        },
    )
}

/// Full evaluation. `data` and `gt` are in original units (a dataset that
/// carries scale parameters is taken as already scaled).
///
/// Null members are set aside, the rest are aligned to the ground truth by
/// minimum SAD, and every metric is computed over the unmasked pixels.
pub fn evaluate_with(
    weights: &ScaWeights,
    data: &HsiDataset,
    gt: &GroundTruth,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if gt.endmembers.cols() != data.bands() || gt.abundances.rows() != data.pixels() {
        return Err(ScaError::contract(format!(
            "ground truth is {}x{} / {}x{}, data is {} pixels x {} bands",
            gt.endmembers.rows(),
            gt.endmembers.cols(),
            gt.abundances.rows(),
            gt.abundances.cols(),
            data.pixels(),
            data.bands()
        )));
    }
    let s = score(weights, data, opts)?;
    let k_extracted = weights.members();
    let active: Vec<usize> = (0..k_extracted).filter(|k| !s.null_members.contains(k)).collect();
    if active.is_empty() {
        return Err(ScaError::Evaluation("all extracted members are null".into()));
    }
    let extracted = unscale_endmembers(&weights.decoder, &s.params);
    let active_spectra = extracted.select_rows(&active);

    // (truth, extracted) pairs
    let mut pairs: Vec<(usize, usize)> = if active.len() >= gt.members() {
        align_endmembers(&active_spectra, &gt.endmembers)?
            .into_iter()
            .enumerate()
            .map(|(t, e)| (t, active[e]))
            .collect()
    } else {
        // fewer usable members than truth: match each extracted one instead
        let cost = sad_cost(&gt.endmembers, &active_spectra);
        assignment::solve_lexicographic(&cost)
            .into_iter()
            .enumerate()
            .map(|(e, t)| (t, active[e]))
            .collect()
    };
    pairs.sort_unstable();

    let mut permutation = vec![None; k_extracted];
    let mut sad_per_member = Vec::with_capacity(pairs.len());
    let mut rmse_a_per_member = Vec::with_capacity(pairs.len());
    let mut a_est = Vec::new();
    let mut a_true = Vec::new();
    let mut e_est = Vec::new();
    let mut e_true = Vec::new();
    for &(t, e) in &pairs {
        permutation[e] = Some(t);
        sad_per_member.push(sad(gt.endmembers.row(t), extracted.row(e)).unwrap_or(PI));
        let est: Vec<f64> = s.keep.iter().map(|&n| s.abundances[(n, e)]).collect();
        let truth: Vec<f64> = s.keep.iter().map(|&n| gt.abundances[(n, t)]).collect();
        rmse_a_per_member.push(rmse(&truth, &est)?);
        a_est.extend(est);
        a_true.extend(truth);
        e_est.extend_from_slice(extracted.row(e));
        e_true.extend_from_slice(gt.endmembers.row(t));
    }
    let (biorth, volume) = weight_terms(weights, &s)?;
    Ok(EvalReport {
        permutation,
        matched_truth: pairs.iter().map(|p| p.0).collect(),
        sad_mean: sad_per_member.iter().sum::<f64>() / sad_per_member.len() as f64,
        sad_per_member,
        rmse_a_per_member,
        rmse_a: rmse(&a_true, &a_est)?,
        rmse_e: rmse(&e_true, &e_est)?,
        rmse_y: rmse_y(&s)?,
        null_members: s.null_members.clone(),
        decoder_range_violations: s.decoder_range_violations,
        biorth,
        volume,
        evaluated_pixels: s.keep.len(),
        reference: opts.reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sad_examples() {
        let x = [0.2, 0.5, 0.9];
        assert!(sad(&x, &x).unwrap().abs() < 1e-7);
        assert!((sad(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - PI / 2.0).abs() < 1e-15);
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!(sad(&x, &twice).unwrap() < 1e-7);
        assert!(matches!(sad(&[0.0, 0.0], &[1.0, 0.0]), Err(ScaError::Degenerate(_))));
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[2.0], &[0.0]).unwrap(), 2.0);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn null_member_detection() {
        let a = Matrix::from_rows(&[[0.5, 0.0, 0.5], [0.2, 0.0, 0.8]]).unwrap();
        assert_eq!(detect_null_members(&a, DEFAULT_NULL_THRESHOLD), vec![1]);
        let uniform = Matrix::from_fn(4, 3, |_, _| 1.0 / 3.0);
        assert!(detect_null_members(&uniform, DEFAULT_NULL_THRESHOLD).is_empty());
    }

    #[test]
    fn align_recovers_permutation() {
        let truth = Matrix::from_rows(&[[1.0, 0.1, 0.0], [0.0, 1.0, 0.2], [0.3, 0.0, 1.0]]).unwrap();
        let extracted = truth.select_rows(&[2, 0, 1]);
        assert_eq!(align_endmembers(&extracted, &truth).unwrap(), vec![1, 2, 0]);
        assert!(align_endmembers(&truth.select_rows(&[0, 1]), &truth).is_err());
    }

    #[test]
    fn reference_lookup() {
        assert_eq!(published_reference("samson"), Some(SAMSON_REFERENCE));
        assert!(published_reference("pavia").is_none());
    }
}
