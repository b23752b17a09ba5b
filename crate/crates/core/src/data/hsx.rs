//! HSX container and CSV helpers.
//!
//! An HSX file is one line of UTF-8 JSON followed by `\n` and a little-endian,
//! row-major `f64` payload of exactly `n * f * 8` bytes:
//!
//! ```text
//! {"magic":"HSX1","n":2000,"f":60,"width":50,"height":40,"dtype":"f64"}\n
//! <n*f little-endian f64>
//! ```
//!
//! Optional header keys: `wavelengths` (length `f`), `scale` (`y_min`,
//! `y_max`) and `kind` (set to `"sca-weights"` for weight files).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HsiDataset, Raster, ScaleParams};
use crate::error::{Result, ScaError};
use crate::linalg::Matrix;
use crate::model::ScaWeights;

pub const MAGIC: &str = "HSX1";
const WEIGHTS_KIND: &str = "sca-weights";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    magic: String,
    n: u64,
    f: u64,
    width: Option<u64>,
    height: Option<u64>,
    dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wavelengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<ScaleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
}

/// Decoded contents of an HSX file.
#[derive(Clone, Debug, PartialEq)]
pub struct HsxFile {
    pub matrix: Matrix,
    pub raster: Option<Raster>,
    pub wavelengths: Option<Vec<f64>>,
    pub scale: Option<ScaleParams>,
    pub kind: Option<String>,
}

impl HsxFile {
    pub fn from_matrix(matrix: Matrix) -> Self {
        HsxFile {
            matrix,
            raster: None,
            wavelengths: None,
            scale: None,
            kind: None,
        }
    }
}

pub fn encode(file: &HsxFile) -> Result<Vec<u8>> {
    let header = Header {
        magic: MAGIC.to_string(),
        n: file.matrix.rows() as u64,
        f: file.matrix.cols() as u64,
        width: file.raster.map(|r| r.width as u64),
        height: file.raster.map(|r| r.height as u64),
        dtype: "f64".to_string(),
        wavelengths: file.wavelengths.clone(),
        scale: file.scale,
        kind: file.kind.clone(),
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    out.reserve(file.matrix.as_slice().len() * 8);
    for v in file.matrix.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<HsxFile> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| ScaError::format(bytes.len() as u64, "header line is not terminated"))?;
    let header: Header = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| ScaError::format(e.column().saturating_sub(1) as u64, format!("bad header: {e}")))?;
    if header.magic != MAGIC {
        return Err(ScaError::format(0, format!("magic {:?} is not {MAGIC:?}", header.magic)));
    }
    if header.dtype != "f64" {
        return Err(ScaError::format(0, format!("unsupported dtype {:?}", header.dtype)));
    }
    let to_usize = |v: u64, what: &str| {
        usize::try_from(v).map_err(|_| ScaError::format(0, format!("{what}={v} does not fit in memory")))
    };
    let n = to_usize(header.n, "n")?;
    let f = to_usize(header.f, "f")?;
    let expected = n
        .checked_mul(f)
        .and_then(|c| c.checked_mul(8))
        .ok_or_else(|| ScaError::format(0, format!("n*f*8 overflows for n={n}, f={f}")))?;

    let start = newline + 1;
    let payload = &bytes[start..];
    if payload.len() != expected {
        let kind = if payload.len() < expected { "truncated" } else { "oversized" };
        return Err(ScaError::format(
            (start + payload.len().min(expected)) as u64,
            format!("{kind} payload: header declares {expected} bytes, found {}", payload.len()),
        ));
    }
    let mut data = Vec::with_capacity(n * f);
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        if !v.is_finite() {
            return Err(ScaError::format((start + i * 8) as u64, "non-finite value"));
        }
        data.push(v);
    }
    let matrix = Matrix::from_vec(n, f, data)?;

    let raster = match (header.width, header.height) {
        (Some(w), Some(h)) => {
            let (w, h) = (to_usize(w, "width")?, to_usize(h, "height")?);
            if w.checked_mul(h) != Some(n) {
                return Err(ScaError::format(0, format!("raster {w}x{h} does not hold n={n} pixels")));
            }
            Some(Raster { width: w, height: h })
        }
        (None, None) => None,
        _ => return Err(ScaError::format(0, "width and height must both be set or both be null")),
    };
    if let Some(wl) = &header.wavelengths {
        if wl.len() != f {
            return Err(ScaError::format(0, format!("{} wavelengths for f={f}", wl.len())));
        }
    }
    Ok(HsxFile {
        matrix,
        raster,
        wavelengths: header.wavelengths,
        scale: header.scale,
        kind: header.kind,
    })
}

pub fn dataset_to_hsx(data: &HsiDataset) -> HsxFile {
    HsxFile {
        matrix: data.y.clone(),
        raster: data.raster,
        wavelengths: data.wavelengths.clone(),
        scale: data.scale,
        kind: None,
    }
}

pub fn save_hsx(path: impl AsRef<Path>, data: &HsiDataset) -> Result<()> {
    fs::write(path, encode(&dataset_to_hsx(data))?)?;
    Ok(())
}

pub fn load_hsx(path: impl AsRef<Path>) -> Result<HsiDataset> {
    let file = decode(&fs::read(path)?)?;
    Ok(HsiDataset {
        raster: file.raster,
        wavelengths: file.wavelengths,
        scale: file.scale,
        ..HsiDataset::new(file.matrix)?
    })
}

/// Writes any matrix (e.g. abundances) as a plain HSX file.
pub fn save_matrix_hsx(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, encode(&HsxFile::from_matrix(m.clone()))?)?;
    Ok(())
}

pub fn load_matrix_hsx(path: impl AsRef<Path>) -> Result<Matrix> {
    Ok(decode(&fs::read(path)?)?.matrix)
}

/// Weights are stored as a 2K×F matrix: the decoder rows followed by the
/// encoder columns.
pub fn save_weights(path: impl AsRef<Path>, w: &ScaWeights) -> Result<()> {
    let (k, f) = w.decoder.shape();
    let mut data = Vec::with_capacity(2 * k * f);
    data.extend_from_slice(w.decoder.as_slice());
    data.extend_from_slice(w.encoder.transpose().as_slice());
    let file = HsxFile {
        kind: Some(WEIGHTS_KIND.to_string()),
        ..HsxFile::from_matrix(Matrix::from_vec(2 * k, f, data)?)
    };
    fs::write(path, encode(&file)?)?;
    Ok(())
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ScaWeights> {
    let file = decode(&fs::read(path)?)?;
    if file.kind.as_deref() != Some(WEIGHTS_KIND) {
        return Err(ScaError::format(0, format!("not a weights file (kind {:?})", file.kind)));
    }
    let (rows, f) = file.matrix.shape();
    if rows % 2 != 0 || rows == 0 {
        return Err(ScaError::format(0, format!("weights file has {rows} rows, expected 2K")));
    }
    let k = rows / 2;
    let all = file.matrix.as_slice();
    let decoder = Matrix::from_vec(k, f, all[..k * f].to_vec())?;
    let encoder = Matrix::from_vec(k, f, all[k * f..].to_vec())?.transpose();
    ScaWeights::new(encoder, decoder)
}

/// Parses comma-separated rows. Blank lines are skipped.
pub fn parse_csv_matrix(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if !trimmed.is_empty() {
            let row = trimmed
                .split(',')
                .map(|field| {
                    field
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| ScaError::format(offset, format!("bad number {field:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(ScaError::format(
                        offset,
                        format!("row has {} values, expected {}", row.len(), first.len()),
                    ));
                }
            }
            rows.push(row);
        }
        offset += line.len() as u64;
    }
    Matrix::from_rows(&rows)
}

/// Imports a CSV with one pixel per line. `bands`, when given, must match.
pub fn load_csv(path: impl AsRef<Path>, bands: Option<usize>) -> Result<HsiDataset> {
    let m = parse_csv_matrix(&fs::read_to_string(path)?)?;
    if let Some(f) = bands {
        if m.cols() != f {
            return Err(ScaError::format(0, format!("CSV has {} bands, expected {f}", m.cols())));
        }
    }
    HsiDataset::new(m)
}

pub fn format_csv_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, format_csv_matrix(m))?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_csv_matrix(&fs::read_to_string(path)?)
}
