//! Visual artifacts: abundance-map PNGs, spectra and simplex-scatter CSVs.
//!
//! PNGs are 8-bit grayscale with only IHDR/IDAT/IEND chunks and fixed
//! compression settings, so identical inputs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::Raster;
use crate::error::{Result, ScaError};
use crate::linalg::Matrix;

/// Maps an abundance in [0, 1] to a gray level; out-of-range values are clamped.
pub fn gray_level(a: f64) -> u8 {
    (255.0 * a.clamp(0.0, 1.0)).round() as u8
}

/// Encodes a row-major `width × height` grayscale image.
pub fn encode_gray_png(pixels: &[u8], raster: Raster) -> Result<Vec<u8>> {
    if pixels.len() != raster.width * raster.height {
        return Err(ScaError::contract(format!(
            "{} pixels do not fill a {}x{} raster",
            pixels.len(),
            raster.width,
            raster.height
        )));
    }
    let width = u32::try_from(raster.width).map_err(|_| ScaError::contract("raster too wide for PNG"))?;
    let height = u32::try_from(raster.height).map_err(|_| ScaError::contract("raster too tall for PNG"))?;
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::NoFilter);
        let mut writer = enc
            .write_header()
            .map_err(|e| ScaError::contract(format!("png header: {e}")))?;
        writer
            .write_image_data(pixels)
            .map_err(|e| ScaError::contract(format!("png data: {e}")))?;
        writer
            .finish()
            .map_err(|e| ScaError::contract(format!("png finish: {e}")))?;
    }
    Ok(out)
}

/// One PNG per column of `a` (N×K), pixels in raster order.
pub fn abundance_maps(a: &Matrix, raster: Raster) -> Result<Vec<Vec<u8>>> {
    check_raster(a, raster)?;
    (0..a.cols())
        .map(|k| {
            let pixels: Vec<u8> = a.column(k).into_iter().map(gray_level).collect();
            encode_gray_png(&pixels, raster)
        })
        .collect()
}

/// Absolute-difference maps `|a - a_truth|`, one per column.
pub fn difference_maps(a: &Matrix, a_truth: &Matrix, raster: Raster) -> Result<Vec<Vec<u8>>> {
    if a.shape() != a_truth.shape() {
        return Err(ScaError::contract(format!(
            "abundance shapes differ: {:?} vs {:?}",
            a.shape(),
            a_truth.shape()
        )));
    }
    let diff = Matrix::from_fn(a.rows(), a.cols(), |i, j| (a[(i, j)] - a_truth[(i, j)]).abs());
    abundance_maps(&diff, raster)
}

fn check_raster(a: &Matrix, raster: Raster) -> Result<()> {
    if raster.width * raster.height != a.rows() {
        return Err(ScaError::contract(format!(
            "raster {}x{} does not match {} pixels",
            raster.width,
            raster.height,
            a.rows()
        )));
    }
    Ok(())
}

/// Spectra table: one row per band with the (optional) wavelength, then
/// `gt_k,extracted_k` pairs. `truth[k]` is the spectrum matched to extracted
/// member `k`; unmatched members get empty GT cells.
pub fn spectra_csv(extracted: &Matrix, truth: Option<&[Option<&[f64]>]>, wavelengths: Option<&[f64]>) -> Result<String> {
    let (k, f) = extracted.shape();
    if let Some(t) = truth {
        if t.len() != k || t.iter().flatten().any(|row| row.len() != f) {
            return Err(ScaError::contract(format!("truth spectra do not line up with {k}x{f} extracted")));
        }
    }
    if let Some(w) = wavelengths {
        if w.len() != f {
            return Err(ScaError::contract(format!("{} wavelengths for {f} bands", w.len())));
        }
    }
    let mut header = vec!["band".to_string()];
    if wavelengths.is_some() {
        header.push("wavelength".into());
    }
    for m in 0..k {
        if truth.is_some() {
            header.push(format!("gt_{m}"));
        }
        header.push(format!("extracted_{m}"));
    }
    let mut out = header.join(",");
    out.push('\n');
    for b in 0..f {
        let mut row = vec![b.to_string()];
        if let Some(w) = wavelengths {
            row.push(format!("{}", w[b]));
        }
        for m in 0..k {
            if let Some(t) = truth {
                row.push(t[m].map(|r| format!("{}", r[b])).unwrap_or_default());
            }
            row.push(format!("{}", extracted[(m, b)]));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Abundance rows as a K-column scatter table.
pub fn scatter_csv(a: &Matrix) -> String {
    let header: Vec<String> = (0..a.cols()).map(|k| format!("a{k}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for row in a.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// First two simplex coordinates of every abundance row; for K=3 the points
/// fill a right isosceles triangle.
pub fn projection_csv(a: &Matrix) -> Result<String> {
    if a.cols() < 2 {
        return Err(ScaError::contract("projection needs at least two members"));
    }
    let mut out = String::from("x,y\n");
    for row in a.row_iter() {
        out.push_str(&format!("{},{}\n", row[0], row[1]));
    }
    Ok(out)
}

/// Everything needed for one export run.
pub struct ExportInput<'a> {
    pub abundances: &'a Matrix,
    pub raster: Option<Raster>,
    /// Extracted endmembers in the dataset's original units.
    pub endmembers: &'a Matrix,
    /// Ground-truth spectrum matched to each extracted member, if any.
    pub truth_endmembers: Option<Vec<Option<&'a [f64]>>>,
    /// Ground-truth abundances in extracted-member order (zero for unmatched members).
    pub truth_abundances: Option<&'a Matrix>,
    pub wavelengths: Option<&'a [f64]>,
}

/// Writes all artifacts under `dir`, returning the paths written and any warnings.
pub fn write_all(dir: &Path, input: &ExportInput) -> Result<(Vec<PathBuf>, Vec<String>)> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut warnings = Vec::new();
    let put = |name: String, bytes: &[u8], written: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };

    match input.raster {
        Some(raster) => {
            for (k, png) in abundance_maps(input.abundances, raster)?.iter().enumerate() {
                put(format!("abundance_{k}.png"), png, &mut written)?;
            }
            if let Some(truth) = input.truth_abundances {
                for (k, png) in difference_maps(input.abundances, truth, raster)?.iter().enumerate() {
                    put(format!("difference_{k}.png"), png, &mut written)?;
                }
            }
        }
        None => warnings.push("dataset has no raster geometry; abundance maps skipped".to_string()),
    }

    let spectra = spectra_csv(input.endmembers, input.truth_endmembers.as_deref(), input.wavelengths)?;
    put("spectra.csv".into(), spectra.as_bytes(), &mut written)?;
    put("simplex.csv".into(), scatter_csv(input.abundances).as_bytes(), &mut written)?;
    if input.abundances.cols() >= 2 {
        put("simplex_2d.csv".into(), projection_csv(input.abundances)?.as_bytes(), &mut written)?;
    }
    Ok((written, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode(bytes: &[u8]) -> (png::OutputInfo, Vec<u8>) {
        let mut reader = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        buf.truncate(info.buffer_size());
        (info, buf)
    }

    #[test]
    fn uniform_thirds_are_gray_85() {
        let a = Matrix::from_fn(4, 3, |_, _| 1.0 / 3.0);
        let maps = abundance_maps(&a, Raster { width: 2, height: 2 }).unwrap();
        assert_eq!(maps.len(), 3);
        for m in &maps {
            let (info, px) = decode(m);
            assert_eq!((info.width, info.height), (2, 2));
            assert_eq!(info.color_type, png::ColorType::Grayscale);
            assert_eq!(px, vec![85; 4]);
        }
    }

    #[test]
    fn equal_abundances_give_black_difference() {
        let a = Matrix::from_rows(&[vec![0.2, 0.8], vec![1.0, 0.0]]).unwrap();
        for m in difference_maps(&a, &a, Raster { width: 1, height: 2 }).unwrap() {
            assert_eq!(decode(&m).1, vec![0, 0]);
        }
    }

    #[test]
    fn only_critical_chunks() {
        let png = encode_gray_png(&[0, 128, 255], Raster { width: 3, height: 1 }).unwrap();
        let mut pos = 8;
        let mut names = Vec::new();
        while pos < png.len() {
            let len = u32::from_be_bytes(png[pos..pos + 4].try_into().unwrap()) as usize;
            names.push(String::from_utf8(png[pos + 4..pos + 8].to_vec()).unwrap());
            pos += 12 + len;
        }
        assert_eq!(names, ["IHDR", "IDAT", "IEND"]);
        assert_eq!(png, encode_gray_png(&[0, 128, 255], Raster { width: 3, height: 1 }).unwrap());
    }

    #[test]
    fn gray_levels_round_and_clamp() {
        assert_eq!(gray_level(0.5), 128);
        assert_eq!(gray_level(-0.1), 0);
        assert_eq!(gray_level(1.7), 255);
    }

    #[test]
    fn raster_mismatch_is_rejected() {
        let a = Matrix::zeros(5, 2);
        assert!(abundance_maps(&a, Raster { width: 2, height: 2 }).is_err());
    }

    #[test]
    fn spectra_layout() {
        let e = Matrix::from_rows(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let truth = [Some(e.row(0)), None];
        let csv = spectra_csv(&e, Some(&truth), Some(&[400.0, 410.0])).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "band,wavelength,gt_0,extracted_0,gt_1,extracted_1");
        assert_eq!(lines[1], "0,400,0.1,0.1,,0.3");
        assert_eq!(spectra_csv(&e, None, None).unwrap().lines().next().unwrap(), "band,extracted_0,extracted_1");
    }

    #[test]
    fn missing_geometry_still_writes_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let a = Matrix::from_rows(&[vec![0.5, 0.5], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e = Matrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![0.3, 0.2, 0.1]]).unwrap();
        let input = ExportInput {
            abundances: &a,
            raster: None,
            endmembers: &e,
            truth_endmembers: None,
            truth_abundances: None,
            wavelengths: None,
        };
        let (written, warnings) = write_all(dir.path(), &input).unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(written.len(), 3);
        let proj = fs::read_to_string(dir.path().join("simplex_2d.csv")).unwrap();
        assert_eq!(proj.lines().nth(1), Some("0.5,0.5"));
    }
}
