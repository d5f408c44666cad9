//! Numerical studies built on the optimizer: minimal gate times, fidelity
//! versus pulse count, amplitude-noise Monte Carlo and rise-time sweeps.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fidelity::{fidelity_of, gate_fidelity};
use crate::optimize::{optimize, OptimizationConfig, OptimizationResult, OptimizerSettings};
use crate::propagator::{ControlScheme, ControlSystem, PulseSequence};
use crate::seeding;
use crate::spin_model::{build_target, GateKind, SpinChainModel, TargetGate};

pub const DEFAULT_FIDELITY_THRESHOLD: f64 = 0.999;
pub const DEFAULT_TIME_STEP: f64 = 0.1;
pub const DEFAULT_MAX_SEGMENT_DURATION: f64 = 0.15;
pub const DEFAULT_MAX_PULSES: usize = 100;
pub const DEFAULT_NOISE_SAMPLES: usize = 1000;

/// Ascending grid `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return invalid(format!("grid needs start < stop, got {}..{}", self.start, self.stop));
        }
        if !(self.step > 0.0) {
            return invalid("grid step must be positive");
        }
        if !(self.start > 0.0) {
            return invalid("gate times must be positive");
        }
        Ok(())
    }

    /// Grid points, rounded to 1e-9 so that repeated additions do not drift.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| ((self.start + k as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

/// Pulse-count policy: the smallest admissible `N_t` with `T ≤ T_max`, capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePolicy {
    pub max_segment_duration: f64,
    pub max_pulses: usize,
}

impl Default for PulsePolicy {
    fn default() -> Self {
        Self {
            max_segment_duration: DEFAULT_MAX_SEGMENT_DURATION,
            max_pulses: DEFAULT_MAX_PULSES,
        }
    }
}

impl PulsePolicy {
    pub fn pulse_count(&self, scheme: ControlScheme, total_time: f64) -> usize {
        let raw = (total_time / self.max_segment_duration - 1e-9).ceil().max(1.0) as usize;
        let n = scheme.round_up_count(raw);
        let cap = (self.max_pulses / scheme.parity()).max(1) * scheme.parity();
        n.min(cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalTimeScanConfig {
    pub gate: GateKind,
    pub scheme: ControlScheme,
    #[serde(default = "default_ns")]
    pub ns: usize,
    pub delta: f64,
    pub fidelity_threshold: f64,
    pub grid: TimeGrid,
    pub policy: PulsePolicy,
    pub optimizer: OptimizerSettings,
}

fn default_ns() -> usize {
    3
}

impl MinimalTimeScanConfig {
    pub fn new(gate: GateKind, scheme: ControlScheme, delta: f64, grid: TimeGrid) -> Self {
        Self {
            gate,
            scheme,
            ns: 3,
            delta,
            fidelity_threshold: DEFAULT_FIDELITY_THRESHOLD,
            grid,
            policy: PulsePolicy::default(),
            optimizer: OptimizerSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.fidelity_threshold > 0.0 && self.fidelity_threshold < 1.0) {
            return invalid("fidelity threshold must lie in (0, 1)");
        }
        if !(self.policy.max_segment_duration > 0.0) || self.policy.max_pulses == 0 {
            return invalid("pulse policy needs a positive T_max and pulse cap");
        }
        Ok(())
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub delta: f64,
    pub t_f: f64,
    pub n_t: usize,
    pub fidelity: f64,
}

#[derive(Debug, Clone)]
pub struct MinimalTimeOutcome {
    /// `None` when no grid point exceeded the threshold.
    pub minimal_time: Option<f64>,
    /// Optimization at the minimal time.
    pub result: Option<OptimizationResult>,
    /// Every evaluated grid point, ascending in `t_f`.
    pub trace: Vec<ScanPoint>,
}

impl MinimalTimeOutcome {
    pub fn reached(&self) -> bool {
        self.minimal_time.is_some()
    }
}

/// Ascending scan over `t_f`; stops at the first grid point whose best
/// fidelity exceeds the threshold.
pub fn minimal_gate_time(config: &MinimalTimeScanConfig) -> Result<MinimalTimeOutcome> {
    config.validate()?;
    let model = SpinChainModel::new(config.ns, config.delta)?;
    let target = build_target(&model, config.gate)?;
    let mut settings = config.optimizer.clone();
    if settings.stop_fidelity.is_none() {
        settings.stop_fidelity = Some(config.fidelity_threshold);
    }

    let mut trace = Vec::new();
    for t_f in config.grid.points() {
        let n_t = config.policy.pulse_count(config.scheme, t_f);
        let opt =
            OptimizationConfig::for_total_time(model, target.clone(), config.scheme, n_t, t_f).with_settings(&settings);
        let result = optimize(&opt)?;
        log::info!(
            "scan {} Δ={} t_f={t_f} N_t={n_t}: F = {:.6}",
            config.gate,
            config.delta,
            result.best_fidelity
        );
        trace.push(ScanPoint {
            delta: config.delta,
            t_f,
            n_t,
            fidelity: result.best_fidelity,
        });
        if result.best_fidelity > config.fidelity_threshold {
            return Ok(MinimalTimeOutcome {
                minimal_time: Some(t_f),
                result: Some(result),
                trace,
            });
        }
    }
    Ok(MinimalTimeOutcome {
        minimal_time: None,
        result: None,
        trace,
    })
}

#[derive(Debug, Clone)]
pub struct LadderPoint {
    pub n_t: usize,
    pub fidelity: f64,
    pub result: OptimizationResult,
}

/// Problem definition shared by every rung of a fidelity ladder.
#[derive(Debug, Clone)]
pub struct LadderConfig {
    pub model: SpinChainModel,
    pub gate: GateKind,
    pub scheme: ControlScheme,
    pub total_time: f64,
    pub pulse_counts: Vec<usize>,
    pub optimizer: OptimizerSettings,
    /// Seed each rung with the previous rung's optimum resampled onto the new grid.
    pub warm_start: bool,
}

/// Best fidelity for each pulse count at fixed total time, in input order.
pub fn fidelity_ladder(config: &LadderConfig) -> Result<Vec<LadderPoint>> {
    for &n in &config.pulse_counts {
        config.scheme.check_pulse_count(n)?;
    }
    if !(config.total_time > 0.0) {
        return invalid("total time must be positive");
    }
    let target = build_target(&config.model, config.gate)?;
    let mut out: Vec<LadderPoint> = Vec::with_capacity(config.pulse_counts.len());
    for &n_t in &config.pulse_counts {
        let mut opt =
            OptimizationConfig::for_total_time(config.model, target.clone(), config.scheme, n_t, config.total_time)
                .with_settings(&config.optimizer);
        if config.warm_start {
            if let Some(prev) = out.last() {
                opt.initial_guesses = vec![resample(&prev.result.sequence, n_t)?];
            }
        }
        let result = optimize(&opt)?;
        log::info!("ladder N_t={n_t}: F = {:.8}", result.best_fidelity);
        out.push(LadderPoint {
            n_t,
            fidelity: result.best_fidelity,
            result,
        });
    }
    Ok(out)
}

/// Transfers `seq` onto `n_t` segments over the same total time: each new
/// segment takes the amplitude of the latest old segment on its axis that
/// starts no later than the new segment's midpoint (zero if none).
///
/// For a single-axis scheme and an integer refinement this reproduces the
/// same field exactly.
pub fn resample(seq: &PulseSequence, n_t: usize) -> Result<Vec<f64>> {
    let scheme = seq.scheme();
    scheme.check_pulse_count(n_t)?;
    let t_old = seq.segment_duration();
    let t_new = seq.total_time() / n_t as f64;
    Ok((0..n_t)
        .map(|k| {
            let axis = scheme.axis_of_segment(k);
            let mid = (k as f64 + 0.5) * t_new;
            let last_started = ((mid / t_old).floor() as usize).min(seq.n_t() - 1);
            (0..=last_started)
                .rev()
                .find(|&i| seq.axes()[i] == axis)
                .map(|i| seq.amplitudes()[i])
                .unwrap_or(0.0)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct RobustnessConfig {
    pub model: SpinChainModel,
    pub target: TargetGate,
    pub sequence: PulseSequence,
    /// Noise half-widths `δ` (units of `J`).
    pub delta_noise: Vec<f64>,
    pub samples: usize,
    pub rng_seed: u64,
}

impl RobustnessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return invalid("samples must be at least 1");
        }
        if let Some(bad) = self.delta_noise.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return invalid(format!("noise half-width must be non-negative, got {bad}"));
        }
        if self.target.dim() != self.model.dim() {
            return invalid("target dimension does not match the model");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    pub delta_noise: f64,
    pub mean: f64,
    /// Sample standard deviation (`N − 1` denominator; zero for one sample).
    pub std: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Fidelity of one perturbed copy of the sequence: every amplitude gets an
/// independent offset uniform on `[−δ, δ]`.
fn noisy_fidelity(system: &ControlSystem, config: &RobustnessConfig, delta_index: usize, sample: usize) -> f64 {
    let delta = config.delta_noise[delta_index];
    let mut rng = seeding::stream(config.rng_seed, &[delta_index as u64, sample as u64]);
    let amps: Vec<f64> = config
        .sequence
        .amplitudes()
        .iter()
        .map(|&h| h + delta * (2.0 * rng.gen::<f64>() - 1.0))
        .collect();
    let seq = config
        .sequence
        .with_amplitudes(amps)
        .expect("finite perturbation of a valid sequence");
    fidelity_of(system.propagate(&seq).matrix(), config.target.matrix())
}

/// Per-sample fidelities for one noise level; sample `k` is identical for
/// every sample count `> k`.
pub fn noise_samples(config: &RobustnessConfig, delta_index: usize) -> Result<Vec<f64>> {
    config.validate()?;
    if delta_index >= config.delta_noise.len() {
        return invalid(format!("noise index {delta_index} out of range"));
    }
    let system = ControlSystem::new(config.model);
    Ok((0..config.samples)
        .into_par_iter()
        .map(|k| noisy_fidelity(&system, config, delta_index, k))
        .collect())
}

pub fn summarize(delta_noise: f64, samples: &[f64]) -> NoiseStats {
    let n = samples.len();
    let shift = samples.first().copied().unwrap_or(0.0);
    let mean = shift + samples.iter().map(|f| f - shift).sum::<f64>() / n as f64;
    let var = if n > 1 {
        samples.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let std = var.sqrt();
    NoiseStats {
        delta_noise,
        mean,
        std,
        stderr: std / (n as f64).sqrt(),
        n,
    }
}

/// Mean, spread and standard error of the fidelity for each noise level.
pub fn noise_robustness(config: &RobustnessConfig) -> Result<Vec<NoiseStats>> {
    config.validate()?;
    (0..config.delta_noise.len())
        .map(|i| Ok(summarize(config.delta_noise[i], &noise_samples(config, i)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiseTimePoint {
    pub tau: f64,
    pub fidelity: f64,
}

/// Fidelity of the ramped evolution for each rise time.
pub fn rise_time_sweep(
    system: &ControlSystem,
    seq: &PulseSequence,
    target: &TargetGate,
    taus: &[f64],
    substeps: usize,
) -> Result<Vec<RiseTimePoint>> {
    taus.par_iter()
        .map(|&tau| {
            let u = system.propagate_with_rise_time(seq, tau, substeps)?;
            Ok(RiseTimePoint {
                tau,
                fidelity: gate_fidelity(&u, target)?,
            })
        })
        .collect()
}

fn write_rows<W: Write, R: Serialize>(out: W, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::Io(std::io::Error::other(e))
}

/// Columns `delta,t_f,n_t,fidelity`.
pub fn write_scan_csv<W: Write>(out: W, points: &[ScanPoint]) -> Result<()> {
    write_rows(out, &["delta", "t_f", "n_t", "fidelity"], points)
}

/// Columns `n_t,fidelity`.
pub fn write_ladder_csv<W: Write>(out: W, points: &[LadderPoint]) -> Result<()> {
    write_rows(out, &["n_t", "fidelity"], points.iter().map(|p| (p.n_t, p.fidelity)))
}

/// Columns `delta_noise,mean,std,stderr,n`.
pub fn write_robustness_csv<W: Write>(out: W, stats: &[NoiseStats]) -> Result<()> {
    write_rows(out, &["delta_noise", "mean", "std", "stderr", "n"], stats)
}

/// Columns `tau,fidelity`.
pub fn write_rise_time_csv<W: Write>(out: W, points: &[RiseTimePoint]) -> Result<()> {
    write_rows(out, &["tau", "fidelity"], points)
}
