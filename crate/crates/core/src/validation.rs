//! On-demand statistical checks of the alpha-stable sampler.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::stable::{
    empirical_cf, impulsiveness_ratio, ks_distance, sample_vector, RngSeed, StableError,
    StableParams,
};

/// Max allowed `|empirical CF - analytic CF|`.
pub const CF_TOLERANCE: f64 = 0.02;
/// Max allowed KS distance in the Gaussian and Cauchy special cases.
pub const KS_TOLERANCE: f64 = 0.01;
pub const CF_POINTS: [f64; 3] = [0.5, 1.0, 2.0];
pub const MIN_VALIDATION_SAMPLES: usize = 1000;

/// Exact CDF of `SA(2, 0, gamma)`, a Gaussian with `sigma = gamma * sqrt(2)`.
pub fn gaussian_case_cdf(gamma: f64) -> impl Fn(f64) -> f64 {
    let normal = Normal::new(0.0, gamma * std::f64::consts::SQRT_2).expect("positive scale");
    move |x| normal.cdf(x)
}

/// Exact CDF of `SA(1, 0, gamma)`, a Cauchy law.
pub fn cauchy_case_cdf(gamma: f64) -> impl Fn(f64) -> f64 {
    move |x| 0.5 + (x / gamma).atan() / std::f64::consts::PI
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaDiagnostics {
    pub alpha: f64,
    /// `(s, |empirical - analytic|)`.
    pub cf_residuals: Vec<(f64, f64)>,
    /// KS distance to the closed-form law, for `alpha` in `{1, 2}`.
    pub ks: Option<f64>,
    pub impulsiveness: f64,
}

impl AlphaDiagnostics {
    pub fn passed(&self) -> bool {
        self.cf_residuals.iter().all(|&(_, r)| r < CF_TOLERANCE)
            && self.ks.is_none_or(|d| d < KS_TOLERANCE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerDiagnostics {
    pub n: usize,
    pub per_alpha: Vec<AlphaDiagnostics>,
    /// Impulsiveness strictly decreasing in `alpha` across the checked values.
    pub monotone_impulsiveness: bool,
}

impl SamplerDiagnostics {
    pub fn passed(&self) -> bool {
        self.monotone_impulsiveness && self.per_alpha.iter().all(AlphaDiagnostics::passed)
    }
}

/// Draws `n` samples of `SA(alpha, 0, 1)` per alpha (alpha `i` from
/// `seed.derive(i)`) and checks them against the defining characteristic
/// function and, where one exists, the closed-form CDF.
pub fn validate_sampler(
    alphas: &[f64],
    n: usize,
    seed: RngSeed,
) -> Result<SamplerDiagnostics, StableError> {
    if n < MIN_VALIDATION_SAMPLES {
        return Err(StableError::TooFewSamples {
            needed: MIN_VALIDATION_SAMPLES,
            got: n,
        });
    }
    let mut per_alpha = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let params = StableParams::standard(alpha)?;
        let xs = sample_vector(&params, n, &mut seed.derive(i as u64).rng())?.into_inner();
        let cf_residuals = CF_POINTS
            .iter()
            .map(|&s| {
                Ok((
                    s,
                    (empirical_cf(&xs, s)? - params.characteristic_function(s)).norm(),
                ))
            })
            .collect::<Result<Vec<_>, StableError>>()?;
        let ks = if alpha == 2.0 {
            Some(ks_distance(&xs, gaussian_case_cdf(1.0))?)
        } else if alpha == 1.0 {
            Some(ks_distance(&xs, cauchy_case_cdf(1.0))?)
        } else {
            None
        };
        per_alpha.push(AlphaDiagnostics {
            alpha,
            cf_residuals,
            ks,
            impulsiveness: impulsiveness_ratio(&xs)?,
        });
    }
    let mut by_alpha: Vec<&AlphaDiagnostics> = per_alpha.iter().collect();
    by_alpha.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let monotone_impulsiveness = by_alpha
        .windows(2)
        .all(|w| w[0].alpha == w[1].alpha || w[0].impulsiveness > w[1].impulsiveness);
    Ok(SamplerDiagnostics {
        n,
        per_alpha,
        monotone_impulsiveness,
    })
}
