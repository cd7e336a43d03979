//! Perturbation norms, their mean/median aggregates and report rows.

use serde::Serialize;
use thiserror::Error;

use crate::attack::{AttackResult, Termination};
use crate::{DataPoint, Scalar};

/// Coordinates counted as active by [`perturbation_sparsity`] exceed this
/// fraction of the largest magnitude.
pub const SPARSITY_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("cannot aggregate an empty list")]
    Empty,
    #[error("sparsity is undefined for a zero perturbation")]
    ZeroPerturbation,
    #[error("non-finite value in input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::Linf, Norm::L1, Norm::L2];

    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }
}

pub fn lp_norm<T: Scalar>(tau: &[T], p: Norm) -> T {
    match p {
        Norm::L1 => tau.iter().map(|v| v.abs()).sum(),
        Norm::L2 => tau.iter().map(|&v| v * v).sum::<T>().sqrt(),
        Norm::Linf => tau.iter().fold(T::zero(), |m, v| m.max(v.abs())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

/// Arithmetic mean and lower median (for even counts, the smaller of the
/// two middle elements).
pub fn aggregate<T: Scalar>(values: &[T]) -> Result<Summary, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.as_f64()).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(Summary {
        mean,
        median: v[(v.len() - 1) / 2],
    })
}

/// Fraction of coordinates whose magnitude exceeds 1% of the largest one.
/// Lower is sparser.
pub fn perturbation_sparsity<T: Scalar>(tau: &[T]) -> Result<T, MetricsError> {
    let max = lp_norm(tau, Norm::Linf);
    if !max.is_finite() {
        return Err(MetricsError::NonFinite);
    }
    if max == T::zero() {
        return Err(MetricsError::ZeroPerturbation);
    }
    let cut = max * T::lit(SPARSITY_THRESHOLD);
    let active = tau.iter().filter(|v| v.abs() > cut).count();
    Ok(T::lit(active as f64 / tau.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSummaries {
    pub linf: Option<Summary>,
    pub l1: Option<Summary>,
    pub l2: Option<Summary>,
}

/// One row of the report: all attacks run at one `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormTable {
    pub alpha: f64,
    pub norms: NormSummaries,
    /// Mean walk steps over successful attacks.
    pub mean_iterations: Option<f64>,
    pub mean_queries: Option<f64>,
    pub mean_sparsity: Option<f64>,
    pub n_success: usize,
    /// Attacks that found no misclassified start.
    pub n_fail: usize,
    /// Samples the classifier already got wrong; left out of every aggregate.
    pub n_skipped: usize,
}

impl NormTable {
    /// Aggregates successful attacks only.
    pub fn from_results<T: Scalar>(alpha: f64, results: &[AttackResult<T>]) -> Self {
        let ok: Vec<&AttackResult<T>> = results.iter().filter(|r| r.is_success()).collect();
        let count = |t: Termination| results.iter().filter(|r| r.terminated_by == t).count();
        let summarize = |p: Norm| {
            let v: Vec<T> = ok.iter().map(|r| lp_norm(&r.perturbation, p)).collect();
            aggregate(&v).ok()
        };
        let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        Self {
            alpha,
            norms: NormSummaries {
                linf: summarize(Norm::Linf),
                l1: summarize(Norm::L1),
                l2: summarize(Norm::L2),
            },
            mean_iterations: mean(ok.iter().map(|r| r.steps_taken as f64).collect()),
            mean_queries: mean(ok.iter().map(|r| r.queries_used as f64).collect()),
            mean_sparsity: mean(
                ok.iter()
                    .filter_map(|r| perturbation_sparsity(&r.perturbation).ok())
                    .map(|s| s.as_f64())
                    .collect(),
            ),
            n_success: ok.len(),
            n_fail: count(Termination::InitFailed),
            n_skipped: count(Termination::AlreadyMisclassified),
        }
    }
}

/// Full sweep report: the run configuration plus one row per `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report<C> {
    pub config: C,
    pub per_alpha: Vec<NormTable>,
}

impl<C> Report<C> {
    /// One CSV line per `alpha`; empty aggregates are left blank.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "alpha,linf_mean,linf_median,l1_mean,l1_median,l2_mean,l2_median,mean_iterations,mean_queries,mean_sparsity,n_success,n_fail,n_skipped\n",
        );
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.per_alpha {
            let mut cells = vec![row.alpha.to_string()];
            for s in [row.norms.linf, row.norms.l1, row.norms.l2] {
                cells.push(opt(s.map(|s| s.mean)));
                cells.push(opt(s.map(|s| s.median)));
            }
            cells.push(opt(row.mean_iterations));
            cells.push(opt(row.mean_queries));
            cells.push(opt(row.mean_sparsity));
            cells.push(row.n_success.to_string());
            cells.push(row.n_fail.to_string());
            cells.push(row.n_skipped.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Convenience for a perturbation held as a [`DataPoint`].
pub fn norms_of<T: Scalar>(tau: &DataPoint<T>) -> [T; 3] {
    [
        lp_norm(tau, Norm::Linf),
        lp_norm(tau, Norm::L1),
        lp_norm(tau, Norm::L2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_norms() {
        let t = [3.0, -4.0];
        assert_eq!(lp_norm(&t, Norm::L1), 7.0);
        assert_eq!(lp_norm(&t, Norm::L2), 5.0);
        assert_eq!(lp_norm(&t, Norm::Linf), 4.0);
        for p in Norm::ALL {
            assert_eq!(lp_norm(&[0.0f64; 5], p), 0.0);
        }
    }

    #[test]
    fn aggregate_conventions() {
        assert_eq!(
            aggregate(&[1.0, 2.0, 3.0, 4.0]).unwrap(),
            Summary {
                mean: 2.5,
                median: 2.0
            }
        );
        assert_eq!(aggregate(&[4.0, 1.0, 3.0]).unwrap().median, 3.0);
        assert_eq!(
            aggregate(&[5.0]).unwrap(),
            Summary {
                mean: 5.0,
                median: 5.0
            }
        );
        assert_eq!(aggregate::<f64>(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn sparsity_extremes() {
        let mut one = vec![0.0; 20];
        one[7] = -3.0;
        assert_eq!(perturbation_sparsity(&one).unwrap(), 1.0 / 20.0);
        assert_eq!(perturbation_sparsity(&[0.2f64; 8]).unwrap(), 1.0);
        assert_eq!(
            perturbation_sparsity(&[0.0f64; 8]),
            Err(MetricsError::ZeroPerturbation)
        );
    }
}
