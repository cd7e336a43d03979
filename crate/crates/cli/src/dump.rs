//! Grayscale PGM (P5) dumps of originals, adversarials and perturbations.
//!
//! Each PGM has a raw little-endian f64 sidecar (`.f64`) carrying the exact
//! vector. The difference image maps `0` to mid-gray `128` and `+-max|tau|`
//! to `255`/`1`; the factor `127 / max|tau|` (0 for a zero perturbation) is
//! written to the PGM comment and to the `.json` metadata file.

use std::fs;
use std::path::{Path, PathBuf};

use levy_attack::metrics::{lp_norm, Norm};
use levy_attack::{Bounds, Outcome, Point};
use serde::Serialize;

pub const MID_GRAY: u8 = 128;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DumpMeta {
    pub rows: usize,
    pub cols: usize,
    pub low: f64,
    pub high: f64,
    pub difference_scale: f64,
    pub label: usize,
    pub final_label: usize,
    pub alpha: f64,
    pub sample_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpedFiles {
    pub original: PathBuf,
    pub adversarial: PathBuf,
    pub difference: PathBuf,
    pub meta: PathBuf,
}

pub fn encode_pgm(rows: usize, cols: usize, comment: Option<&str>, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(rows * cols, pixels.len());
    let mut out = b"P5\n".to_vec();
    if let Some(c) = comment {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    out.extend_from_slice(format!("{cols} {rows}\n255\n").as_bytes());
    out.extend_from_slice(pixels);
    out
}

/// Parses a binary PGM with maxval 255; returns `(rows, cols, pixels)`.
pub fn decode_pgm(buf: &[u8]) -> Option<(usize, usize, Vec<u8>)> {
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < buf.len() && buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if buf.get(pos) == Some(&b'#') {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return None;
        }
        fields.push(std::str::from_utf8(&buf[start..pos]).ok()?.to_string());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let cols: usize = fields[1].parse().ok()?;
    let rows: usize = fields[2].parse().ok()?;
    let pixels = buf.get(pos..pos + rows * cols)?.to_vec();
    Some((rows, cols, pixels))
}

pub fn quantize(v: f64, bounds: &Bounds<f64>) -> u8 {
    (((v - bounds.low) / bounds.width()) * 255.0)
        .round()
        .clamp(0.0, 255.0) as u8
}

pub fn dequantize(b: u8, bounds: &Bounds<f64>) -> f64 {
    bounds.low + b as f64 / 255.0 * bounds.width()
}

/// `(pixels, scale)` for a perturbation.
pub fn difference_pixels(tau: &[f64]) -> (Vec<u8>, f64) {
    let max = lp_norm(tau, Norm::Linf);
    if max == 0.0 {
        return (vec![MID_GRAY; tau.len()], 0.0);
    }
    let scale = 127.0 / max;
    let px = tau
        .iter()
        .map(|&t| (MID_GRAY as f64 + t * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    (px, scale)
}

fn f64_bytes(v: &[f64]) -> Vec<u8> {
    v.iter().flat_map(|x| x.to_le_bytes()).collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Writes the three images (plus sidecars) of one attack into `dir`.
#[allow(clippy::too_many_arguments)]
pub fn dump_result(
    dir: &Path,
    rows: usize,
    cols: usize,
    bounds: &Bounds<f64>,
    original: &Point,
    label: usize,
    result: &Outcome,
    alpha: f64,
    sample_index: usize,
) -> Result<DumpedFiles, String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let stem = format!("a{alpha}_s{sample_index}");
    let path = |suffix: &str| dir.join(format!("{stem}_{suffix}"));
    let to_px = |p: &Point| p.iter().map(|&v| quantize(v, bounds)).collect::<Vec<u8>>();
    let (diff_px, scale) = difference_pixels(&result.perturbation);

    let files = DumpedFiles {
        original: path("original.pgm"),
        adversarial: path("adversarial.pgm"),
        difference: path("difference.pgm"),
        meta: path("meta.json"),
    };
    write(
        &files.original,
        &encode_pgm(rows, cols, None, &to_px(original)),
    )?;
    write(&path("original.f64"), &f64_bytes(original))?;
    write(
        &files.adversarial,
        &encode_pgm(rows, cols, None, &to_px(&result.adversarial)),
    )?;
    write(&path("adversarial.f64"), &f64_bytes(&result.adversarial))?;
    write(
        &files.difference,
        &encode_pgm(rows, cols, Some(&format!("scale={scale}")), &diff_px),
    )?;
    write(&path("difference.f64"), &f64_bytes(&result.perturbation))?;
    let meta = DumpMeta {
        rows,
        cols,
        low: bounds.low,
        high: bounds.high,
        difference_scale: scale,
        label,
        final_label: result.final_label.0,
        alpha,
        sample_index,
    };
    write(
        &files.meta,
        serde_json::to_string_pretty(&meta).unwrap().as_bytes(),
    )?;
    Ok(files)
}
