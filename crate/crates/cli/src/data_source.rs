//! Where a command gets its labelled points from.

use std::path::PathBuf;

use levy_attack::data::{make_synthetic_blobs, DataError};
use levy_attack::{Dataset, PixelScale, RngSeed};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlobParams {
    pub classes: usize,
    pub dim: usize,
    pub points_per_class: usize,
    pub separation: f64,
    pub data_seed: u64,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            classes: 2,
            dim: 50,
            points_per_class: 250,
            separation: 6.0,
            data_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Idx {
        images: PathBuf,
        labels: PathBuf,
        #[serde(skip)]
        scale: PixelScale,
        scale_01: bool,
        num_classes: usize,
        classes: Option<Vec<usize>>,
    },
    Synthetic(BlobParams),
}

impl DataSource {
    /// Loads the data. IDX files are used as given regardless of `split`;
    /// synthetic train and test sets are independent draws.
    pub fn load(&self, split: Split) -> Result<Dataset, DataError> {
        match self {
            DataSource::Idx {
                images,
                labels,
                scale,
                num_classes,
                classes,
                ..
            } => {
                let ds = Dataset::load_idx(images, labels, *scale, *num_classes)?;
                match classes {
                    Some(c) => ds.filter_classes(c),
                    None => Ok(ds),
                }
            }
            DataSource::Synthetic(p) => {
                let stream = match split {
                    Split::Train => 0,
                    Split::Test => 1,
                };
                let mut rng = RngSeed(p.data_seed).derive(stream).rng();
                make_synthetic_blobs(p.classes, p.dim, p.points_per_class, p.separation, &mut rng)
            }
        }
    }

    /// `(rows, cols)` used when dumping points as images.
    pub fn image_shape(&self, dim: usize) -> (usize, usize) {
        let side = (dim as f64).sqrt().round() as usize;
        match self {
            DataSource::Idx { .. } if side * side == dim => (side, side),
            _ => (1, dim),
        }
    }
}
