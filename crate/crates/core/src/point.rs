//! Flat real vectors and the box they live in.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Closed interval applied to every coordinate of a data point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub low: T,
    pub high: T,
}

impl<T: Scalar> Bounds<T> {
    /// Returns `None` unless `low < high` and both are finite.
    pub fn new(low: T, high: T) -> Option<Self> {
        (low.is_finite() && high.is_finite() && low < high).then_some(Self { low, high })
    }

    #[inline]
    pub fn contains(&self, v: T) -> bool {
        v >= self.low && v <= self.high
    }

    #[inline]
    pub fn clamp(&self, v: T) -> T {
        v.max(self.low).min(self.high)
    }

    #[inline]
    pub fn width(&self) -> T {
        self.high - self.low
    }

    pub fn contains_point(&self, p: &[T]) -> bool {
        p.iter().all(|&v| self.contains(v))
    }
}

/// A flat real vector: an input sample, an iterate of the walk, a step or a
/// perturbation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DataPoint<T>(pub Vec<T>);

impl<T: Scalar> DataPoint<T> {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn from_f64_slice(v: &[f64]) -> Self {
        Self(v.iter().map(|&x| T::lit(x)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn dot(&self, other: &[T]) -> T {
        dot(&self.0, other)
    }

    pub fn norm_sq(&self) -> T {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Squared Euclidean distance to `other`.
    pub fn dist_sq(&self, other: &[T]) -> T {
        dist_sq(&self.0, other)
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &[T]) -> Self {
        debug_assert_eq!(self.dim(), other.len());
        Self(self.0.iter().zip(other).map(|(&a, &b)| a - b).collect())
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &[T]) -> Self {
        debug_assert_eq!(self.dim(), other.len());
        Self(self.0.iter().zip(other).map(|(&a, &b)| a + b).collect())
    }

    pub fn scale(&self, k: T) -> Self {
        Self(self.0.iter().map(|&a| a * k).collect())
    }

    pub fn clip(&self, bounds: &Bounds<T>) -> Self {
        Self(self.0.iter().map(|&v| bounds.clamp(v)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.as_f64()).collect()
    }
}

impl<T> From<Vec<T>> for DataPoint<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<T> Deref for DataPoint<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for DataPoint<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn dist_sq<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}
