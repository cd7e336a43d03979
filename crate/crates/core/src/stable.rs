//! Symmetric alpha-stable sampling and its statistical diagnostics.
//!
//! Draws follow the law with characteristic function
//! `phi(s) = exp(i*mu*s - |gamma*s|^alpha)`. Sampling uses the
//! Chambers-Mallows-Stuck construction specialised to zero skew; `alpha = 1`
//! takes the closed-form Cauchy branch `tan(U)`.
//!
//! Under this parameterisation `alpha = 2` is a Gaussian with variance
//! `2 * gamma^2`, not `gamma^2`.

use num_complex::Complex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{DataPoint, Scalar};

/// Random stream used throughout the crate. Portable and reproducible.
pub type StreamRng = ChaCha8Rng;

/// Smallest sample size accepted by [`impulsiveness_ratio`].
pub const MIN_IMPULSIVENESS_SAMPLES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StableError {
    #[error("characteristic exponent must lie in (0, 2], got {0}")]
    Alpha(f64),
    #[error("scale must be positive and finite, got {0}")]
    Gamma(f64),
    #[error("location must be finite, got {0}")]
    Mu(f64),
    #[error("vector dimension must be at least 1")]
    ZeroDim,
    #[error("empty sample")]
    Empty,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate sample: {0}")]
    Degenerate(&'static str),
}

/// 64-bit master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> StreamRng {
        StreamRng::seed_from_u64(self.0)
    }

    /// Child seed for stream `index`. Depends only on `(self, index)`, so
    /// work split across threads sees the same streams as a serial loop.
    pub fn derive(self, index: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ splitmix64(index.wrapping_add(0x5EED))))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `(alpha, mu, gamma)` of a symmetric alpha-stable law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableParams<T> {
    alpha: T,
    mu: T,
    gamma: T,
}

impl<T: Scalar> StableParams<T> {
    pub fn new(alpha: T, mu: T, gamma: T) -> Result<Self, StableError> {
        if !(alpha > T::zero() && alpha <= T::lit(2.0)) {
            return Err(StableError::Alpha(alpha.as_f64()));
        }
        if !(gamma > T::zero() && gamma.is_finite()) {
            return Err(StableError::Gamma(gamma.as_f64()));
        }
        if !mu.is_finite() {
            return Err(StableError::Mu(mu.as_f64()));
        }
        Ok(Self { alpha, mu, gamma })
    }

    /// `SA(alpha, 0, 1)`, the law the random walk draws its steps from.
    pub fn standard(alpha: T) -> Result<Self, StableError> {
        Self::new(alpha, T::zero(), T::one())
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn mu(&self) -> T {
        self.mu
    }
    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Analytic characteristic function at `s`.
    pub fn characteristic_function(&self, s: T) -> Complex<T> {
        let modulus = (-(self.gamma * s).abs().powf(self.alpha)).exp();
        Complex::from_polar(modulus, self.mu * s)
    }

    /// Draw from the zero-location unit-scale law.
    fn sample_standard<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let half_pi = T::FRAC_PI_2();
        let margin = half_pi * T::epsilon() * T::lit(4.0);
        let limit = half_pi - margin;
        let one = T::one();
        loop {
            let u: f64 = rng.random();
            let angle = (T::PI() * (T::lit(u) - T::lit(0.5))).max(-limit).min(limit);
            if self.alpha == one {
                return angle.tan();
            }
            let w: f64 = Exp1.sample(rng);
            let w = T::lit(w).max(T::min_positive_value());
            let a = self.alpha;
            let head = (a * angle).sin() / angle.cos().powf(one / a);
            let tail = (((one - a) * angle).cos() / w).powf((one - a) / a);
            let x = head * tail;
            // Overflow is only reachable in f32 at extreme (W, U) draws.
            if x.is_finite() {
                return x;
            }
        }
    }
}

impl<T: Scalar> Distribution<T> for StableParams<T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.mu + self.gamma * self.sample_standard(rng)
    }
}

/// One draw from `SA(alpha, mu, gamma)`.
pub fn sample_scalar<T: Scalar, R: Rng + ?Sized>(params: &StableParams<T>, rng: &mut R) -> T {
    params.sample(rng)
}

/// `dim` i.i.d. draws, in stream order.
pub fn sample_vector<T: Scalar, R: Rng + ?Sized>(
    params: &StableParams<T>,
    dim: usize,
    rng: &mut R,
) -> Result<DataPoint<T>, StableError> {
    if dim == 0 {
        return Err(StableError::ZeroDim);
    }
    Ok(DataPoint((0..dim).map(|_| params.sample(rng)).collect()))
}

/// Source of raw step directions for the random walk.
///
/// The walk only uses the direction of each draw (the step is rescaled
/// afterwards), so samplers that differ by a constant factor drive
/// identical walks.
pub trait DirectionSampler<T: Scalar> {
    fn draw(&mut self, dim: usize, rng: &mut StreamRng) -> DataPoint<T>;
}

impl<T: Scalar> DirectionSampler<T> for StableParams<T> {
    fn draw(&mut self, dim: usize, rng: &mut StreamRng) -> DataPoint<T> {
        DataPoint((0..dim).map(|_| self.sample(rng)).collect())
    }
}

/// i.i.d. `N(0, sigma^2)` steps: the classic boundary-attack proposal.
#[derive(Debug, Clone, Copy)]
pub struct GaussianSampler<T> {
    pub sigma: T,
}

impl<T: Scalar> GaussianSampler<T> {
    /// Gaussian with the same law as `SA(2, 0, 1)`.
    pub fn matched_to_stable() -> Self {
        Self { sigma: T::SQRT_2() }
    }
}

impl<T: Scalar> DirectionSampler<T> for GaussianSampler<T> {
    fn draw(&mut self, dim: usize, rng: &mut StreamRng) -> DataPoint<T> {
        DataPoint(
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    self.sigma * T::lit(z)
                })
                .collect(),
        )
    }
}

/// `(1/n) * sum_k exp(i*s*x_k)`.
pub fn empirical_cf<T: Scalar>(samples: &[T], s: T) -> Result<Complex<T>, StableError> {
    if samples.is_empty() {
        return Err(StableError::Empty);
    }
    let (re, im) = samples.iter().fold((T::zero(), T::zero()), |(re, im), &x| {
        let (sin, cos) = (s * x).sin_cos();
        (re + cos, im + sin)
    });
    let n = T::from_usize(samples.len()).unwrap();
    Ok(Complex::new(re / n, im / n))
}

/// Nearest-rank quantile of an ascending slice.
pub(crate) fn nearest_rank<T: Copy>(sorted: &[T], p: f64) -> T {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// 99th percentile of `|x|` over the median of `|x|`; grows as tails get
/// heavier.
pub fn impulsiveness_ratio<T: Scalar>(samples: &[T]) -> Result<T, StableError> {
    if samples.len() < MIN_IMPULSIVENESS_SAMPLES {
        return Err(StableError::TooFewSamples {
            needed: MIN_IMPULSIVENESS_SAMPLES,
            got: samples.len(),
        });
    }
    let mut abs: Vec<T> = samples.iter().map(|x| x.abs()).collect();
    if abs.iter().any(|v| v.is_nan()) {
        return Err(StableError::Degenerate("NaN in sample"));
    }
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if abs[0] == abs[abs.len() - 1] {
        return Err(StableError::Degenerate("constant magnitude"));
    }
    let median = nearest_rank(&abs, 0.5);
    if median == T::zero() {
        return Err(StableError::Degenerate("zero median magnitude"));
    }
    Ok(nearest_rank(&abs, 0.99) / median)
}

/// Kolmogorov-Smirnov distance `sup |F_n - F|` against a reference CDF.
pub fn ks_distance<T: Scalar>(samples: &[T], cdf: impl Fn(f64) -> f64) -> Result<f64, StableError> {
    if samples.is_empty() {
        return Err(StableError::Empty);
    }
    let mut xs: Vec<f64> = samples.iter().map(|x| x.as_f64()).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    Ok(xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    }))
}
