//! Binary model format.
//!
//! ```text
//! "LVYM"            4 bytes
//! version           u32 LE (= 1)
//! layer count       u32 LE
//! per layer:
//!   rows            u32 LE
//!   cols            u32 LE
//!   activation      u8 (0 identity, 1 relu)
//!   weights         rows*cols f64 LE, row-major
//!   bias            rows f64 LE
//! ```
//!
//! No padding anywhere.

use std::fs;
use std::path::Path;

use super::network::{Activation, Layer, Network};
use super::OracleError;
use crate::Scalar;

pub const MAGIC: &[u8; 4] = b"LVYM";
pub const VERSION: u32 = 1;

pub fn encode<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    for l in net.layers() {
        out.extend_from_slice(&(l.rows as u32).to_le_bytes());
        out.extend_from_slice(&(l.cols as u32).to_le_bytes());
        out.push(l.activation.tag());
        for v in l.weights.iter().chain(&l.bias) {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], OracleError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(OracleError::Malformed {
                offset: self.pos,
                reason: format!("truncated while reading {what}"),
            }),
        }
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, OracleError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, OracleError> {
        let bytes = n.checked_mul(8).ok_or_else(|| OracleError::Malformed {
            offset: self.pos,
            reason: format!("{what} size overflows"),
        })?;
        Ok(self
            .take(bytes, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode<T: Scalar>(buf: &[u8]) -> Result<Network<T>, OracleError> {
    let mut cur = Cursor { buf, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(OracleError::Malformed {
            offset: 0,
            reason: "bad magic, expected \"LVYM\"".into(),
        });
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(OracleError::Malformed {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let count = cur.u32("layer count")? as usize;
    let mut layers = Vec::new();
    for _ in 0..count {
        let rows = cur.u32("rows")? as usize;
        let cols = cur.u32("cols")? as usize;
        let tag_at = cur.pos;
        let tag = cur.take(1, "activation tag")?[0];
        let activation = Activation::from_tag(tag).ok_or_else(|| OracleError::Malformed {
            offset: tag_at,
            reason: format!("unknown activation tag {tag}"),
        })?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| OracleError::Malformed {
                offset: tag_at,
                reason: "layer size overflows".into(),
            })?;
        let conv = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
        let weights = conv(cur.f64s(n, "weights")?);
        let bias = conv(cur.f64s(rows, "bias")?);
        layers.push(Layer::new(rows, cols, weights, bias, activation)?);
    }
    if cur.pos != buf.len() {
        return Err(OracleError::Malformed {
            offset: cur.pos,
            reason: format!("{} trailing bytes", buf.len() - cur.pos),
        });
    }
    Network::new(layers)
}

pub fn save<T: Scalar>(net: &Network<T>, path: impl AsRef<Path>) -> Result<(), OracleError> {
    let path = path.as_ref();
    fs::write(path, encode(net)).map_err(|e| OracleError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

pub fn load<T: Scalar>(path: impl AsRef<Path>) -> Result<Network<T>, OracleError> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| OracleError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    decode(&buf)
}
