//! Labelled datasets: IDX (MNIST) files and synthetic Gaussian blobs.

use std::fs;
use std::path::Path;

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::oracle::Label;
use crate::stable::{RngSeed, StreamRng};
use crate::{Bounds, DataPoint, Scalar};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Standard deviation of each synthetic blob, per coordinate.
pub const BLOB_SIGMA: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("bad magic at byte 0: expected {expected:#010x}, found {found:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated IDX file: needed {needed} bytes at byte {offset}, file has {len}")]
    Truncated {
        offset: usize,
        needed: usize,
        len: usize,
    },
    #[error("{0} trailing bytes after IDX payload")]
    TrailingBytes(usize),
    #[error("label {value} at byte {offset} is not below num_classes = {num_classes}")]
    InvalidLabel {
        offset: usize,
        value: u8,
        num_classes: usize,
    },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("value {value} of point {index} cannot be stored as a pixel byte")]
    NotAPixel { index: usize, value: f64 },
    #[error("invalid dataset shape: {0}")]
    Shape(String),
}

/// How raw IDX bytes map to coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PixelScale {
    /// Bytes kept as `0..=255`, bounds `(0, 255)`.
    #[default]
    Raw,
    /// Bytes divided by 255, bounds `(0, 1)`.
    Unit,
}

impl PixelScale {
    pub fn bounds<T: Scalar>(self) -> Bounds<T> {
        match self {
            PixelScale::Raw => Bounds {
                low: T::zero(),
                high: T::lit(255.0),
            },
            PixelScale::Unit => Bounds {
                low: T::zero(),
                high: T::one(),
            },
        }
    }

    fn to_value<T: Scalar>(self, byte: u8) -> T {
        match self {
            PixelScale::Raw => T::lit(byte as f64),
            PixelScale::Unit => T::lit(byte as f64) / T::lit(255.0),
        }
    }

    fn to_byte<T: Scalar>(self, v: T) -> Option<u8> {
        let raw = match self {
            PixelScale::Raw => v.as_f64(),
            PixelScale::Unit => v.as_f64() * 255.0,
        };
        let rounded = raw.round();
        ((0.0..=255.0).contains(&rounded) && (raw - rounded).abs() < 1e-6).then_some(rounded as u8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages<T> {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<DataPoint<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    pub points: Vec<DataPoint<T>>,
    pub labels: Vec<Label>,
    pub bounds: Bounds<T>,
    pub num_classes: usize,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DataError> {
        match self.pos.checked_add(n).filter(|&e| e <= self.buf.len()) {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(DataError::Truncated {
                offset: self.pos,
                needed: n,
                len: self.buf.len(),
            }),
        }
    }

    fn u32_be(&mut self) -> Result<u32, DataError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn finish(&self) -> Result<(), DataError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(DataError::TrailingBytes(n)),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn check_magic(r: &mut Reader<'_>, expected: u32) -> Result<(), DataError> {
    let found = r.u32_be()?;
    if found != expected {
        return Err(DataError::BadMagic { expected, found });
    }
    Ok(())
}

pub fn decode_idx_images<T: Scalar>(
    buf: &[u8],
    scale: PixelScale,
) -> Result<IdxImages<T>, DataError> {
    let mut r = Reader { buf, pos: 0 };
    check_magic(&mut r, IDX_IMAGES_MAGIC)?;
    let count = r.u32_be()? as usize;
    let rows = r.u32_be()? as usize;
    let cols = r.u32_be()? as usize;
    let pixels = rows * cols;
    let payload = r.take(
        count
            .checked_mul(pixels)
            .ok_or_else(|| DataError::Shape("image payload overflows".into()))?,
    )?;
    r.finish()?;
    let images = if pixels == 0 {
        vec![DataPoint(Vec::new()); count]
    } else {
        payload
            .chunks_exact(pixels)
            .map(|img| DataPoint(img.iter().map(|&b| scale.to_value(b)).collect()))
            .collect()
    };
    Ok(IdxImages { rows, cols, images })
}

pub fn decode_idx_labels(buf: &[u8], num_classes: usize) -> Result<Vec<Label>, DataError> {
    let mut r = Reader { buf, pos: 0 };
    check_magic(&mut r, IDX_LABELS_MAGIC)?;
    let count = r.u32_be()? as usize;
    let start = r.pos;
    let payload = r.take(count)?;
    r.finish()?;
    payload
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if (b as usize) < num_classes {
                Ok(Label(b as usize))
            } else {
                Err(DataError::InvalidLabel {
                    offset: start + i,
                    value: b,
                    num_classes,
                })
            }
        })
        .collect()
}

/// Parses a big-endian IDX3 image file (magic `0x00000803`) into flattened
/// images.
pub fn load_idx_images<T: Scalar>(
    path: impl AsRef<Path>,
    scale: PixelScale,
) -> Result<IdxImages<T>, DataError> {
    decode_idx_images(&read_file(path.as_ref())?, scale)
}

/// Parses a big-endian IDX1 label file (magic `0x00000801`).
pub fn load_idx_labels(
    path: impl AsRef<Path>,
    num_classes: usize,
) -> Result<Vec<Label>, DataError> {
    decode_idx_labels(&read_file(path.as_ref())?, num_classes)
}

pub fn encode_idx_images<T: Scalar>(
    rows: usize,
    cols: usize,
    points: &[DataPoint<T>],
    scale: PixelScale,
) -> Result<Vec<u8>, DataError> {
    let mut out = Vec::with_capacity(16 + points.len() * rows * cols);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for v in [points.len(), rows, cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    for (index, p) in points.iter().enumerate() {
        if p.dim() != rows * cols {
            return Err(DataError::Shape(format!(
                "point {index} has {} coordinates, expected {}",
                p.dim(),
                rows * cols
            )));
        }
        for &v in p.iter() {
            out.push(scale.to_byte(v).ok_or(DataError::NotAPixel {
                index,
                value: v.as_f64(),
            })?);
        }
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[Label]) -> Result<Vec<u8>, DataError> {
    let mut out = IDX_LABELS_MAGIC.to_be_bytes().to_vec();
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for l in labels {
        out.push(
            u8::try_from(l.0)
                .map_err(|_| DataError::Shape(format!("label {} exceeds a byte", l.0)))?,
        );
    }
    Ok(out)
}

impl<T: Scalar> LabeledDataset<T> {
    /// Checks every structural invariant of a dataset.
    pub fn new(
        points: Vec<DataPoint<T>>,
        labels: Vec<Label>,
        bounds: Bounds<T>,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        if points.len() != labels.len() {
            return Err(DataError::CountMismatch {
                images: points.len(),
                labels: labels.len(),
            });
        }
        if let Some(l) = labels.iter().find(|l| l.0 >= num_classes) {
            return Err(DataError::Shape(format!(
                "label {} not below {num_classes}",
                l.0
            )));
        }
        if let Some(d) = points.first().map(|p| p.dim()) {
            if points.iter().any(|p| p.dim() != d) {
                return Err(DataError::Shape("mixed point dimensions".into()));
            }
        }
        if let Some(i) = points.iter().position(|p| !bounds.contains_point(p)) {
            return Err(DataError::Shape(format!(
                "point {i} lies outside the bounds"
            )));
        }
        Ok(Self {
            points,
            labels,
            bounds,
            num_classes,
        })
    }

    /// Pairs an image file with its label file.
    pub fn from_idx(
        images: IdxImages<T>,
        labels: Vec<Label>,
        scale: PixelScale,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        Self::new(images.images, labels, scale.bounds(), num_classes)
    }

    pub fn load_idx(
        images: impl AsRef<Path>,
        labels: impl AsRef<Path>,
        scale: PixelScale,
        num_classes: usize,
    ) -> Result<Self, DataError> {
        let imgs = load_idx_images(images, scale)?;
        let labels = load_idx_labels(labels, num_classes)?;
        Self::from_idx(imgs, labels, scale, num_classes)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.dim())
    }

    /// Keeps only `classes`, relabelled `0..classes.len()` in the given order.
    pub fn filter_classes(&self, classes: &[usize]) -> Result<Self, DataError> {
        if classes.is_empty() {
            return Err(DataError::Shape("no classes selected".into()));
        }
        let (points, labels) = self
            .points
            .iter()
            .zip(&self.labels)
            .filter_map(|(p, l)| {
                classes
                    .iter()
                    .position(|&c| c == l.0)
                    .map(|k| (p.clone(), Label(k)))
            })
            .unzip();
        Self::new(points, labels, self.bounds, classes.len())
    }

    /// Points at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            bounds: self.bounds,
            num_classes: self.num_classes,
        }
    }

    /// Splits into the first `n` points and the rest.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let n = n.min(self.len());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }

    pub fn write_idx(
        &self,
        images: impl AsRef<Path>,
        labels: impl AsRef<Path>,
        rows: usize,
        cols: usize,
        scale: PixelScale,
    ) -> Result<(), DataError> {
        let write = |path: &Path, bytes: Vec<u8>| {
            fs::write(path, bytes).map_err(|e| DataError::Io {
                path: path.display().to_string(),
                reason: e.to_string(),
            })
        };
        write(
            images.as_ref(),
            encode_idx_images(rows, cols, &self.points, scale)?,
        )?;
        write(labels.as_ref(), encode_idx_labels(&self.labels)?)
    }
}

/// `n` distinct indices out of `0..total`, drawn uniformly from `seed`.
pub fn sample_indices(total: usize, n: usize, seed: RngSeed) -> Vec<usize> {
    let mut rng = seed.rng();
    index::sample(&mut rng, total, n.min(total)).into_vec()
}

/// Isotropic Gaussian blobs inside `[0, 1]^dim`.
///
/// Centres sit at the vertices of a regular simplex around the box centre,
/// `separation` blob standard deviations apart. Class `k` points are
/// contiguous, classes in ascending order.
pub fn make_synthetic_blobs<T: Scalar>(
    num_classes: usize,
    dim: usize,
    points_per_class: usize,
    separation: f64,
    rng: &mut StreamRng,
) -> Result<LabeledDataset<T>, DataError> {
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(DataError::Shape(format!(
            "separation must be positive, got {separation}"
        )));
    }
    if dim < 2 {
        return Err(DataError::Shape(format!(
            "dimension must be at least 2, got {dim}"
        )));
    }
    if num_classes < 2 || num_classes > dim {
        return Err(DataError::Shape(format!(
            "need 2 <= num_classes <= dim, got {num_classes} classes in {dim}-D"
        )));
    }
    if points_per_class == 0 {
        return Err(DataError::Shape("points_per_class must be positive".into()));
    }
    // Basis vertices e_k are sqrt(2) apart; rescale to the requested gap.
    let radius = separation * BLOB_SIGMA / std::f64::consts::SQRT_2;
    let centroid = 1.0 / num_classes as f64;
    let bounds = Bounds {
        low: T::zero(),
        high: T::one(),
    };
    let mut points = Vec::with_capacity(num_classes * points_per_class);
    let mut labels = Vec::with_capacity(num_classes * points_per_class);
    for k in 0..num_classes {
        let center: Vec<f64> = (0..dim)
            .map(|j| {
                let e = if j == k { 1.0 } else { 0.0 };
                let c = if j < num_classes { centroid } else { 0.0 };
                0.5 + radius * (e - c)
            })
            .collect();
        for _ in 0..points_per_class {
            let p = center
                .iter()
                .map(|&c| {
                    let z: f64 = StandardNormal.sample(rng);
                    T::lit((c + BLOB_SIGMA * z).clamp(0.0, 1.0))
                })
                .collect();
            points.push(DataPoint(p));
            labels.push(Label(k));
        }
    }
    LabeledDataset::new(points, labels, bounds, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> Vec<u8> {
        let mut b = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2];
        b.extend_from_slice(&[0, 255, 128, 7, 1, 2, 3, 254]);
        b
    }

    #[test]
    fn hand_crafted_images() {
        let imgs = decode_idx_images::<f64>(&two_by_two(), PixelScale::Raw).unwrap();
        assert_eq!((imgs.rows, imgs.cols), (2, 2));
        assert_eq!(imgs.images[0].0, vec![0.0, 255.0, 128.0, 7.0]);
        assert_eq!(imgs.images[1].0, vec![1.0, 2.0, 3.0, 254.0]);
        let unit = decode_idx_images::<f64>(&two_by_two(), PixelScale::Unit).unwrap();
        assert_eq!(unit.images[0].0, vec![0.0, 1.0, 128.0 / 255.0, 7.0 / 255.0]);
    }

    #[test]
    fn wrong_magic_and_truncation() {
        let labels = vec![0, 0, 8, 1, 0, 0, 0, 3, 7, 9, 0];
        assert_eq!(
            decode_idx_images::<f64>(&labels, PixelScale::Raw),
            Err(DataError::BadMagic {
                expected: 0x803,
                found: 0x801
            })
        );
        assert!(matches!(
            decode_idx_images::<f64>(&[], PixelScale::Raw),
            Err(DataError::Truncated { offset: 0, .. })
        ));
        let b = two_by_two();
        assert_eq!(
            decode_idx_images::<f64>(&b[..b.len() - 1], PixelScale::Raw),
            Err(DataError::Truncated {
                offset: 16,
                needed: 8,
                len: 23
            })
        );
        let mut long = b.clone();
        long.push(0);
        assert_eq!(
            decode_idx_images::<f64>(&long, PixelScale::Raw),
            Err(DataError::TrailingBytes(1))
        );
    }

    #[test]
    fn hand_crafted_labels() {
        let labels = vec![0, 0, 8, 1, 0, 0, 0, 3, 7, 9, 0];
        assert_eq!(
            decode_idx_labels(&labels, 10).unwrap(),
            vec![Label(7), Label(9), Label(0)]
        );
        let bad = vec![0, 0, 8, 1, 0, 0, 0, 1, 10];
        assert_eq!(
            decode_idx_labels(&bad, 10),
            Err(DataError::InvalidLabel {
                offset: 8,
                value: 10,
                num_classes: 10
            })
        );
        assert!(matches!(
            decode_idx_labels(&[], 10),
            Err(DataError::Truncated { .. })
        ));
    }

    #[test]
    fn count_mismatch_at_assembly() {
        let imgs = decode_idx_images::<f64>(&two_by_two(), PixelScale::Raw).unwrap();
        let labels = vec![Label(1), Label(2), Label(3)];
        assert_eq!(
            LabeledDataset::from_idx(imgs, labels, PixelScale::Raw, 10),
            Err(DataError::CountMismatch {
                images: 2,
                labels: 3
            })
        );
    }

    #[test]
    fn blobs_deterministic_and_bounded() {
        let a = make_synthetic_blobs::<f64>(3, 5, 40, 6.0, &mut RngSeed(1).rng()).unwrap();
        let b = make_synthetic_blobs::<f64>(3, 5, 40, 6.0, &mut RngSeed(1).rng()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 120);
        assert!(a.points.iter().all(|p| a.bounds.contains_point(p)));
        assert!(make_synthetic_blobs::<f64>(2, 2, 10, 0.0, &mut RngSeed(1).rng()).is_err());
        assert!(make_synthetic_blobs::<f64>(2, 1, 10, 6.0, &mut RngSeed(1).rng()).is_err());
        assert!(make_synthetic_blobs::<f64>(3, 2, 10, 6.0, &mut RngSeed(1).rng()).is_err());
    }

    #[test]
    fn filter_and_sample() {
        let d = make_synthetic_blobs::<f64>(3, 3, 5, 6.0, &mut RngSeed(2).rng()).unwrap();
        let f = d.filter_classes(&[2, 0]).unwrap();
        assert_eq!(f.len(), 10);
        assert_eq!(f.num_classes, 2);
        assert_eq!(f.labels[0], Label(1));
        assert_eq!(f.labels[9], Label(0));
        let idx = sample_indices(100, 10, RngSeed(4));
        let mut uniq = idx.clone();
        uniq.sort_unstable();
        uniq.dedup();
        assert_eq!(uniq.len(), 10);
        assert_eq!(idx, sample_indices(100, 10, RngSeed(4)));
    }
}
