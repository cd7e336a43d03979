//! The three geometric moves that make up one proposal.

use thiserror::Error;

use crate::point::{dist_sq, dot};
use crate::{Bounds, DataPoint, Scalar};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum GeometryError {
    /// The raw draw has zero (or non-finite) length; draw again.
    #[error("step draw has zero or non-finite norm")]
    ZeroNorm,
    /// The walk point coincides with the original sample.
    #[error("current point coincides with the original sample")]
    AtOriginal,
}

/// Norm computed on a max-rescaled copy so heavy-tailed draws do not
/// overflow when squared. Returns `(max_abs, norm / max_abs)`.
fn scaled_norm<T: Scalar>(v: &[T]) -> Option<(T, T)> {
    let m = v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if !(m > T::zero() && m.is_finite()) {
        return None;
    }
    let s = v.iter().fold(T::zero(), |acc, &x| {
        let y = x / m;
        acc + y * y
    });
    Some((m, s.sqrt()))
}

/// Scales `eta` to L2 length `delta * distance`, where `distance` is the
/// squared L2 distance of the walk point to the original.
pub fn rescale_step<T: Scalar>(
    eta: &[T],
    delta: T,
    distance: T,
) -> Result<DataPoint<T>, GeometryError> {
    let (m, unit_norm) = scaled_norm(eta).ok_or(GeometryError::ZeroNorm)?;
    let k = delta * distance / unit_norm;
    Ok(DataPoint(eta.iter().map(|&e| (e / m) * k).collect()))
}

/// Moves `current` along the tangential part of `step` and projects the
/// result back onto the sphere through `current` centred at `original`.
pub fn orthogonal_project<T: Scalar>(
    original: &[T],
    current: &[T],
    step: &[T],
) -> Result<DataPoint<T>, GeometryError> {
    let radial: Vec<T> = current.iter().zip(original).map(|(&c, &x)| c - x).collect();
    let r2 = dot(&radial, &radial);
    if r2 == T::zero() {
        return Err(GeometryError::AtOriginal);
    }
    let along = dot(step, &radial) / r2;
    let moved: Vec<T> = radial
        .iter()
        .zip(step)
        .map(|(&v, &s)| v + (s - along * v))
        .collect();
    let moved_norm = dot(&moved, &moved).sqrt();
    let k = r2.sqrt() / moved_norm;
    Ok(DataPoint(
        original
            .iter()
            .zip(&moved)
            .map(|(&x, &w)| x + w * k)
            .collect(),
    ))
}

/// Contracts `candidate` toward `original` so the squared distance drops by
/// the fraction `epsilon`. Not clipped.
pub fn shrink_toward_source<T: Scalar>(
    original: &[T],
    candidate: &[T],
    epsilon: T,
) -> DataPoint<T> {
    if epsilon == T::zero() {
        return DataPoint(candidate.to_vec());
    }
    let k = (T::one() - epsilon).sqrt();
    DataPoint(
        original
            .iter()
            .zip(candidate)
            .map(|(&x, &c)| x + k * (c - x))
            .collect(),
    )
}

/// Clips `point` into `bounds` and nudges each coordinate until
/// `original + (point - original)` reproduces it exactly, so that a point
/// and its perturbation are interchangeable without rounding drift.
pub fn clip_canonical<T: Scalar>(original: &[T], point: &[T], bounds: &Bounds<T>) -> DataPoint<T> {
    DataPoint(
        original
            .iter()
            .zip(point)
            .map(|(&x, &p)| {
                let mut c = bounds.clamp(p);
                for _ in 0..4 {
                    let back = x + (c - x);
                    if back == c {
                        break;
                    }
                    c = bounds.clamp(back);
                }
                c
            })
            .collect(),
    )
}

/// Pulls a canonical `point` toward `original` by a few ulps until its
/// squared distance is at most `limit`. Undoes the rounding that can put a
/// projected point a hair outside its sphere.
pub fn fit_within<T: Scalar>(
    original: &[T],
    point: DataPoint<T>,
    limit: T,
    bounds: &Bounds<T>,
) -> DataPoint<T> {
    let mut p = point;
    let mut k = T::one() - T::lit(4.0) * T::epsilon();
    for _ in 0..8 {
        if dist_sq(&p, original) <= limit {
            break;
        }
        let pulled: Vec<T> = original
            .iter()
            .zip(p.iter())
            .map(|(&x, &c)| x + k * (c - x))
            .collect();
        p = clip_canonical(original, &pulled, bounds);
        k = k * k;
    }
    p
}

/// Squared distance, the walk's `d(., original)`.
pub fn sq_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    dist_sq(a, b)
}
