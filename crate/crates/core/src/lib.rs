//! Decision-based black-box adversarial attack whose random walk is driven
//! by symmetric alpha-stable noise.
//!
//! The crate is generic over the scalar type ([`Scalar`], implemented for
//! `f32` and `f64`); the aliases at the bottom of this file fix it to `f64`,
//! the precision the model file format stores.
//!
//! - [`stable`]: alpha-stable sampling and its diagnostics
//! - [`oracle`]: decision-only classifier access with query counting
//! - [`attack`]: the random walk itself
//! - [`data`]: IDX files and synthetic blobs
//! - [`metrics`]: perturbation norms and report tables

pub mod attack;
pub mod data;
pub mod metrics;
pub mod oracle;
mod point;
mod scalar;
pub mod stable;
pub mod validation;

pub use attack::{
    run_attack, run_attack_with, AttackConfig, AttackError, AttackResult, AttackState, Termination,
};
pub use data::{LabeledDataset, PixelScale};
pub use oracle::{load_model, Classifier, Label, Network, Oracle, OracleError};
pub use point::{Bounds, DataPoint};
pub use scalar::Scalar;
pub use stable::{RngSeed, StableParams, StreamRng};

pub type Point = DataPoint<f64>;
pub type Point32 = DataPoint<f32>;
pub type Model = Oracle<f64>;
pub type Model32 = Oracle<f32>;
pub type Config = AttackConfig<f64>;
pub type Outcome = AttackResult<f64>;
pub type Dataset = LabeledDataset<f64>;
pub type Stable = StableParams<f64>;
