//! Multi-start BFGS maximization of the gate fidelity over segment amplitudes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bfgs::{self, BfgsOptions, Termination};
use crate::error::{invalid, Result};
use crate::fidelity::{fidelity_and_gradient, sequence_fidelity};
use crate::propagator::{ControlScheme, ControlSystem, PulseSequence};
use crate::seeding;
use crate::spin_model::{SpinChainModel, TargetGate};

pub const DEFAULT_RESTARTS: usize = 20;
pub const DEFAULT_INIT_AMPLITUDE_BOUND: f64 = 20.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_GRADIENT_TOLERANCE: f64 = 1e-8;

/// With an early-stop fidelity set, restarts run in blocks of this size and
/// the run ends after the first block that reaches it. The block size is fixed
/// so the outcome does not depend on the number of threads.
pub const EARLY_STOP_BLOCK: usize = 8;

/// Optimizer settings independent of the control problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    pub restarts: usize,
    pub init_amplitude_bound: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub rng_seed: u64,
    #[serde(default)]
    pub stop_fidelity: Option<f64>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            init_amplitude_bound: DEFAULT_INIT_AMPLITUDE_BOUND,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            gradient_tolerance: DEFAULT_GRADIENT_TOLERANCE,
            rng_seed: 0,
            stop_fidelity: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationConfig {
    pub model: SpinChainModel,
    pub target: TargetGate,
    pub scheme: ControlScheme,
    pub n_t: usize,
    pub segment_duration: f64,
    pub restarts: usize,
    /// Initial amplitudes are drawn uniformly from `[-bound, bound]`.
    pub init_amplitude_bound: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub rng_seed: u64,
    /// Stop as soon as a restart exceeds this fidelity.
    pub stop_fidelity: Option<f64>,
    /// Explicit starting points used by the first restarts instead of random draws.
    pub initial_guesses: Vec<Vec<f64>>,
}

impl OptimizationConfig {
    /// Defaults for everything except the problem definition.
    pub fn new(
        model: SpinChainModel,
        target: TargetGate,
        scheme: ControlScheme,
        n_t: usize,
        segment_duration: f64,
    ) -> Self {
        Self {
            model,
            target,
            scheme,
            n_t,
            segment_duration,
            restarts: DEFAULT_RESTARTS,
            init_amplitude_bound: DEFAULT_INIT_AMPLITUDE_BOUND,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            gradient_tolerance: DEFAULT_GRADIENT_TOLERANCE,
            rng_seed: 0,
            stop_fidelity: None,
            initial_guesses: Vec::new(),
        }
    }

    pub fn with_settings(mut self, settings: &OptimizerSettings) -> Self {
        self.restarts = settings.restarts;
        self.init_amplitude_bound = settings.init_amplitude_bound;
        self.max_iterations = settings.max_iterations;
        self.gradient_tolerance = settings.gradient_tolerance;
        self.rng_seed = settings.rng_seed;
        self.stop_fidelity = settings.stop_fidelity;
        self
    }

    /// Picks `T = t_f / n_t`.
    pub fn for_total_time(
        model: SpinChainModel,
        target: TargetGate,
        scheme: ControlScheme,
        n_t: usize,
        total_time: f64,
    ) -> Self {
        Self::new(model, target, scheme, n_t, total_time / n_t.max(1) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return invalid("restarts must be at least 1");
        }
        self.scheme.check_pulse_count(self.n_t)?;
        if !(self.segment_duration.is_finite() && self.segment_duration > 0.0) {
            return invalid(format!(
                "segment duration must be positive, got {}",
                self.segment_duration
            ));
        }
        if !(self.init_amplitude_bound.is_finite() && self.init_amplitude_bound > 0.0) {
            return invalid("initial amplitude bound must be positive");
        }
        if self.target.dim() != self.model.dim() {
            return invalid(format!(
                "target dimension {} does not match the model dimension {}",
                self.target.dim(),
                self.model.dim()
            ));
        }
        if let Some(bad) = self.initial_guesses.iter().find(|g| g.len() != self.n_t) {
            return invalid(format!(
                "initial guess has {} amplitudes, expected {}",
                bad.len(),
                self.n_t
            ));
        }
        Ok(())
    }

    pub fn total_time(&self) -> f64 {
        self.n_t as f64 * self.segment_duration
    }

    /// Starting amplitudes of restart `index`.
    pub fn initial_amplitudes(&self, index: usize) -> Vec<f64> {
        if let Some(g) = self.initial_guesses.get(index) {
            return g.clone();
        }
        let mut rng = seeding::stream(self.rng_seed, &[index as u64]);
        let b = self.init_amplitude_bound;
        (0..self.n_t).map(|_| rng.gen_range(-b..=b)).collect()
    }

    pub fn sequence(&self, amplitudes: Vec<f64>) -> Result<PulseSequence> {
        PulseSequence::new(self.scheme, self.segment_duration, amplitudes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartStatus {
    Converged,
    TargetReached,
    MaxIterations,
    /// Line search failure; the restart keeps its last fidelity.
    Failed,
    Stalled,
}

impl From<Termination> for RestartStatus {
    fn from(t: Termination) -> Self {
        match t {
            Termination::GradientConverged => RestartStatus::Converged,
            Termination::TargetReached => RestartStatus::TargetReached,
            Termination::MaxIterations => RestartStatus::MaxIterations,
            Termination::LineSearchFailed => RestartStatus::Failed,
            Termination::Stalled => RestartStatus::Stalled,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub amplitudes: Vec<f64>,
    pub fidelity: f64,
    pub iterations: usize,
    pub status: RestartStatus,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best_amplitudes: Vec<f64>,
    pub best_fidelity: f64,
    pub best_restart: usize,
    pub per_restart_fidelities: Vec<f64>,
    pub iterations_used: Vec<usize>,
    pub restart_status: Vec<RestartStatus>,
    pub seed_used: u64,
    pub sequence: PulseSequence,
}

/// Runs one BFGS descent on `1 − F` from the given amplitudes.
pub fn run_restart(system: &ControlSystem, config: &OptimizationConfig, start: Vec<f64>) -> Result<RestartOutcome> {
    let template = config.sequence(start.clone())?;
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        // Non-finite trial points are rejected by the sequence constructor.
        let Ok(seq) = template.with_amplitudes(x.to_vec()) else {
            return (f64::INFINITY, vec![0.0; x.len()]);
        };
        let (f, g) = fidelity_and_gradient(system, &seq, &config.target).expect("dimensions validated");
        (1.0 - f, g.into_iter().map(|v| -v).collect())
    };
    let opts = BfgsOptions {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
        target_value: config.stop_fidelity.map(|f| 1.0 - f),
        ..BfgsOptions::default()
    };
    let out = bfgs::minimize(objective, &start, &opts);
    let fidelity = sequence_fidelity(system, &template.with_amplitudes(out.x.clone())?, &config.target)?;
    Ok(RestartOutcome {
        amplitudes: out.x,
        fidelity,
        iterations: out.iterations,
        status: out.termination.into(),
    })
}

/// Multi-start maximization of the gate fidelity.
///
/// Restarts run in parallel on the current rayon pool; each draws its initial
/// amplitudes from its own stream, so the result is independent of the thread
/// count. Ties are broken by the lowest restart index.
pub fn optimize(config: &OptimizationConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let system = ControlSystem::new(config.model);

    let block = if config.stop_fidelity.is_some() {
        EARLY_STOP_BLOCK
    } else {
        config.restarts
    };
    let mut outcomes: Vec<RestartOutcome> = Vec::with_capacity(config.restarts);
    let mut first = 0;
    while first < config.restarts {
        let last = (first + block).min(config.restarts);
        let batch: Vec<Result<RestartOutcome>> = (first..last)
            .into_par_iter()
            .map(|r| run_restart(&system, config, config.initial_amplitudes(r)))
            .collect();
        for o in batch {
            outcomes.push(o?);
        }
        first = last;
        if let Some(stop) = config.stop_fidelity {
            if outcomes.iter().any(|o| o.fidelity >= stop) {
                break;
            }
        }
    }

    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.fidelity > outcomes[best].fidelity {
            best = i;
        }
    }
    let sequence = config.sequence(outcomes[best].amplitudes.clone())?;
    Ok(OptimizationResult {
        best_amplitudes: outcomes[best].amplitudes.clone(),
        best_fidelity: outcomes[best].fidelity,
        best_restart: best,
        per_restart_fidelities: outcomes.iter().map(|o| o.fidelity).collect(),
        iterations_used: outcomes.iter().map(|o| o.iterations).collect(),
        restart_status: outcomes.iter().map(|o| o.status).collect(),
        seed_used: config.rng_seed,
        sequence,
    })
}
