//! The decision-based random walk.
//!
//! Starting from a misclassified point, every step draws a raw direction,
//! rescales it relative to the current squared distance, moves tangentially
//! on the sphere around the original sample and then contracts toward it.
//! A step is kept only if the oracle still reports a wrong label. The step
//! size `delta` and contraction `epsilon` adapt to the observed success
//! rates, and the walk stops once `epsilon` falls below `psi`.
//!
//! Every `probe_interval`-th step is an orthogonal-only probe (no
//! contraction); its outcome feeds the `delta` rule. Probes are ordinary
//! walk steps with a single query each, so a run of `T` steps issues at most
//! `T` walk queries.

mod geometry;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::oracle::{Label, Oracle, OracleError};
use crate::stable::{DirectionSampler, RngSeed, StableError, StableParams, StreamRng};
use crate::{Bounds, DataPoint, Scalar};

pub use geometry::{
    clip_canonical, fit_within, orthogonal_project, rescale_step, shrink_toward_source,
    sq_distance, GeometryError,
};

/// Redraws allowed when a direction has zero norm.
pub const MAX_REDRAWS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("invalid attack configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Stable(#[from] StableError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no misclassified starting point after {attempts} draws")]
    InitFailed { attempts: usize },
    #[error("{0} consecutive zero-norm direction draws")]
    DegenerateDraws(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackConfig<T> {
    /// Characteristic exponent of the step distribution.
    pub alpha: T,
    /// Step budget `T`.
    pub max_steps: usize,
    /// Termination threshold on `epsilon`.
    pub psi: T,
    /// Relative orthogonal step size.
    pub initial_delta: T,
    /// Relative shrink of the squared distance per full step.
    pub initial_epsilon: T,
    /// Walk steps (probes and full steps) per adaptation window.
    pub adaptation_window: usize,
    pub adaptation_factor: T,
    /// Every this many steps the walk takes an orthogonal-only probe.
    pub probe_interval: usize,
    pub max_init_attempts: usize,
    /// Target orthogonal success rate for `delta`.
    pub orthogonal_target: T,
    /// Target full-step success rate for `epsilon`.
    pub shrink_target: T,
    pub epsilon_cap: T,
    pub seed: RngSeed,
}

impl<T: Scalar> Default for AttackConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(2.0),
            max_steps: 5000,
            psi: T::lit(1e-7),
            initial_delta: T::lit(0.1),
            initial_epsilon: T::lit(0.1),
            adaptation_window: 30,
            adaptation_factor: T::lit(1.5),
            probe_interval: 10,
            max_init_attempts: 1000,
            orthogonal_target: T::lit(0.5),
            shrink_target: T::lit(0.25),
            epsilon_cap: T::lit(0.99),
            seed: RngSeed(0),
        }
    }
}

impl<T: Scalar> AttackConfig<T> {
    pub fn with_alpha(alpha: T) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        let bad = |m: &str| Err(AttackError::Config(m.to_string()));
        let (zero, one) = (T::zero(), T::one());
        if !(self.alpha > zero && self.alpha <= T::lit(2.0)) {
            return bad("alpha must lie in (0, 2]");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1");
        }
        if !(self.psi > zero && self.psi.is_finite()) {
            return bad("psi must be positive");
        }
        if !(self.initial_delta > zero && self.initial_delta.is_finite()) {
            return bad("initial_delta must be positive");
        }
        if !(self.initial_epsilon > zero && self.initial_epsilon < one) {
            return bad("initial_epsilon must lie in (0, 1)");
        }
        if !(self.epsilon_cap > zero && self.epsilon_cap < one) {
            return bad("epsilon_cap must lie in (0, 1)");
        }
        if self.adaptation_window == 0 {
            return bad("adaptation_window must be at least 1");
        }
        if !(self.adaptation_factor > one && self.adaptation_factor.is_finite()) {
            return bad("adaptation_factor must exceed 1");
        }
        if self.probe_interval < 2 {
            return bad("probe_interval must be at least 2");
        }
        if self.max_init_attempts == 0 {
            return bad("max_init_attempts must be at least 1");
        }
        if !(self.orthogonal_target > zero && self.orthogonal_target < one)
            || !(self.shrink_target > zero && self.shrink_target < one)
        {
            return bad("success-rate targets must lie in (0, 1)");
        }
        Ok(())
    }

    /// Upper bound on the queries one run can issue.
    pub fn query_budget(&self) -> u64 {
        (self.max_init_attempts + self.max_steps + 2) as u64
    }
}

/// Evolving state of one walk.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackState<T> {
    pub current: DataPoint<T>,
    pub step_index: usize,
    pub delta: T,
    pub epsilon: T,
    pub orth_successes: usize,
    pub orth_trials: usize,
    pub shrink_successes: usize,
    pub shrink_trials: usize,
    /// Squared L2 distance of `current` to the original sample.
    pub distance: T,
}

impl<T: Scalar> AttackState<T> {
    pub fn new(original: &[T], start: DataPoint<T>, config: &AttackConfig<T>) -> Self {
        let distance = sq_distance(&start, original);
        Self {
            current: start,
            step_index: 0,
            delta: config.initial_delta,
            epsilon: config.initial_epsilon,
            orth_successes: 0,
            orth_trials: 0,
            shrink_successes: 0,
            shrink_trials: 0,
            distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    EpsilonBelowPsi,
    MaxSteps,
    InitFailed,
    /// The original sample was already misclassified; nothing to do.
    AlreadyMisclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackResult<T> {
    pub adversarial: DataPoint<T>,
    /// `adversarial - original`.
    pub perturbation: DataPoint<T>,
    pub final_label: Label,
    pub steps_taken: usize,
    pub queries_used: u64,
    /// `(t, d)` at the start and after every accepted step.
    pub distance_trace: Vec<(usize, T)>,
    pub terminated_by: Termination,
}

impl<T: Scalar> AttackResult<T> {
    /// True when the run produced a misclassified point by walking.
    pub fn is_success(&self) -> bool {
        matches!(
            self.terminated_by,
            Termination::EpsilonBelowPsi | Termination::MaxSteps
        )
    }

    pub fn final_distance(&self) -> T {
        self.perturbation.norm_sq()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Orthogonal,
    Full,
}

/// One walk step as seen by an observer.
#[derive(Debug)]
pub struct StepEvent<'a, T> {
    pub t: usize,
    pub kind: StepKind,
    pub candidate: &'a DataPoint<T>,
    pub accepted: bool,
    pub state: &'a AttackState<T>,
}

/// Uniform restarts `clip(x + U(low, high)^D)` until the oracle reports a
/// label other than `label`.
pub fn initialize<T: Scalar>(
    oracle: &mut Oracle<T>,
    original: &[T],
    label: Label,
    max_attempts: usize,
    rng: &mut StreamRng,
) -> Result<DataPoint<T>, AttackError> {
    let bounds = oracle.bounds();
    let (low, high) = (bounds.low.as_f64(), bounds.high.as_f64());
    for _ in 0..max_attempts {
        let noisy: Vec<T> = original
            .iter()
            .map(|&x| x + T::lit(rng.random_range(low..high)))
            .collect();
        let start = clip_canonical(original, &noisy, &bounds);
        if oracle.predict(&start)? != label {
            return Ok(start);
        }
    }
    Err(AttackError::InitFailed {
        attempts: max_attempts,
    })
}

/// Raw and clipped outputs of one proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<T> {
    /// After the orthogonal move, before clipping.
    pub orthogonal_raw: DataPoint<T>,
    /// After the contraction, before clipping.
    pub shrunk_raw: DataPoint<T>,
    pub orthogonal: DataPoint<T>,
    pub candidate: DataPoint<T>,
}

/// Draws one direction and runs it through rescale, orthogonal projection
/// and contraction. Zero-norm draws are retried up to [`MAX_REDRAWS`] times.
pub fn propose<T: Scalar, S: DirectionSampler<T> + ?Sized>(
    original: &[T],
    state: &AttackState<T>,
    sampler: &mut S,
    bounds: &Bounds<T>,
    rng: &mut StreamRng,
) -> Result<Proposal<T>, AttackError> {
    let dim = original.len();
    let mut step = None;
    for _ in 0..MAX_REDRAWS {
        let eta = sampler.draw(dim, rng);
        match rescale_step(&eta, state.delta, state.distance) {
            Ok(s) => {
                step = Some(s);
                break;
            }
            Err(GeometryError::ZeroNorm) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let step = step.ok_or(AttackError::DegenerateDraws(MAX_REDRAWS))?;
    let orthogonal_raw = orthogonal_project(original, &state.current, &step)?;
    let shrunk_raw = shrink_toward_source(original, &orthogonal_raw, state.epsilon);
    Ok(Proposal {
        orthogonal: fit_within(
            original,
            clip_canonical(original, &orthogonal_raw, bounds),
            state.distance,
            bounds,
        ),
        candidate: fit_within(
            original,
            clip_canonical(original, &shrunk_raw, bounds),
            state.distance,
            bounds,
        ),
        orthogonal_raw,
        shrunk_raw,
    })
}

/// Applies the success-rate rules at the end of a window and resets the
/// window counters. An empty counter reads as a zero success rate.
pub fn adapt<T: Scalar>(state: &AttackState<T>, config: &AttackConfig<T>) -> AttackState<T> {
    let rate = |s: usize, n: usize| {
        if n == 0 {
            T::zero()
        } else {
            T::lit(s as f64 / n as f64)
        }
    };
    let factor = config.adaptation_factor;
    let delta = if rate(state.orth_successes, state.orth_trials) > config.orthogonal_target {
        state.delta * factor
    } else {
        state.delta / factor
    };
    let epsilon = if rate(state.shrink_successes, state.shrink_trials) > config.shrink_target {
        (state.epsilon * factor).min(config.epsilon_cap)
    } else {
        state.epsilon / factor
    };
    AttackState {
        delta,
        epsilon,
        orth_successes: 0,
        orth_trials: 0,
        shrink_successes: 0,
        shrink_trials: 0,
        ..state.clone()
    }
}

/// Runs the walk with `SA(alpha, 0, 1)` step directions.
pub fn run_attack<T: Scalar>(
    oracle: &mut Oracle<T>,
    original: &[T],
    label: Label,
    config: &AttackConfig<T>,
) -> Result<AttackResult<T>, AttackError> {
    config.validate()?;
    let mut sampler = StableParams::standard(config.alpha)?;
    run_attack_with(oracle, original, label, config, &mut sampler, |_| {})
}

/// Runs the walk with an arbitrary direction sampler, reporting every step
/// to `observer`.
///
/// Expected failures (the original already misclassified, no adversarial
/// start found) are reported through [`AttackResult::terminated_by`]; `Err`
/// is reserved for invalid inputs.
pub fn run_attack_with<T, S, F>(
    oracle: &mut Oracle<T>,
    original: &[T],
    label: Label,
    config: &AttackConfig<T>,
    sampler: &mut S,
    mut observer: F,
) -> Result<AttackResult<T>, AttackError>
where
    T: Scalar,
    S: DirectionSampler<T> + ?Sized,
    F: FnMut(&StepEvent<'_, T>),
{
    config.validate()?;
    let start_queries = oracle.query_count();
    let bounds = oracle.bounds();
    let dim = original.len();
    let zero_result = |final_label, terminated_by, oracle: &Oracle<T>| AttackResult {
        adversarial: DataPoint(original.to_vec()),
        perturbation: DataPoint::zeros(dim),
        final_label,
        steps_taken: 0,
        queries_used: oracle.query_count() - start_queries,
        distance_trace: vec![(0, T::zero())],
        terminated_by,
    };

    let original_label = oracle.predict(original)?;
    if original_label != label {
        return Ok(zero_result(
            original_label,
            Termination::AlreadyMisclassified,
            oracle,
        ));
    }

    let mut rng = config.seed.rng();
    let start = match initialize(oracle, original, label, config.max_init_attempts, &mut rng) {
        Ok(p) => p,
        Err(AttackError::InitFailed { .. }) => {
            return Ok(zero_result(label, Termination::InitFailed, oracle));
        }
        Err(e) => return Err(e),
    };

    let mut state = AttackState::new(original, start, config);
    let mut trace = vec![(0, state.distance)];
    let mut terminated_by = Termination::MaxSteps;
    let mut steps = 0;

    for t in 0..config.max_steps {
        let proposal = propose(original, &state, sampler, &bounds, &mut rng)?;
        let kind = if (t + 1) % config.probe_interval == 0 {
            StepKind::Orthogonal
        } else {
            StepKind::Full
        };
        let candidate = match kind {
            StepKind::Orthogonal => proposal.orthogonal,
            StepKind::Full => proposal.candidate,
        };
        let accepted = oracle.predict(&candidate)? != label;
        match kind {
            StepKind::Orthogonal => {
                state.orth_trials += 1;
                state.orth_successes += accepted as usize;
            }
            StepKind::Full => {
                state.shrink_trials += 1;
                state.shrink_successes += accepted as usize;
            }
        }
        state.step_index = t + 1;
        steps = t + 1;
        if accepted {
            state.distance = sq_distance(&candidate, original);
            state.current = candidate.clone();
            trace.push((t + 1, state.distance));
        }
        observer(&StepEvent {
            t: t + 1,
            kind,
            candidate: &candidate,
            accepted,
            state: &state,
        });
        if state.orth_trials + state.shrink_trials >= config.adaptation_window {
            state = adapt(&state, config);
        }
        if state.epsilon < config.psi {
            terminated_by = Termination::EpsilonBelowPsi;
            break;
        }
    }

    let final_label = oracle.predict(&state.current)?;
    debug_assert_ne!(final_label, label);
    let perturbation = state.current.sub(original);
    Ok(AttackResult {
        adversarial: state.current,
        perturbation,
        final_label,
        steps_taken: steps,
        queries_used: oracle.query_count() - start_queries,
        distance_trace: trace,
        terminated_by,
    })
}
