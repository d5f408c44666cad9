use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use xxz_control::controllability::{
    dynamical_algebra, generator_labels, verify_x_reachability, verify_x_reachability_with, LieReportJson,
};
use xxz_control::experiments::{
    self, PulsePolicy, DEFAULT_FIDELITY_THRESHOLD, DEFAULT_MAX_PULSES, DEFAULT_MAX_SEGMENT_DURATION,
    DEFAULT_NOISE_SAMPLES,
};
use xxz_control::optimize::{
    DEFAULT_GRADIENT_TOLERANCE, DEFAULT_INIT_AMPLITUDE_BOUND, DEFAULT_MAX_ITERATIONS, DEFAULT_RESTARTS,
};
use xxz_control::{
    build_target, fidelity_ladder, minimal_gate_time, noise_robustness, optimize as run_optimizer, rise_time_sweep,
    ControlScheme, GateKind, LadderConfig, MinimalTimeScanConfig, OptimizationConfig, OptimizerSettings,
    RobustnessConfig, SequenceFile, SpinChainModel, TimeGrid,
};

use crate::manifest::{resolve_output, RunManifest};
use crate::Status;

/// Optimizer flags shared by `optimize`, `scan` and `ladder`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizerFlags {
    /// Number of random initial guesses
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Master seed; every restart derives its own stream from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial amplitudes are uniform in [-bound, bound] (units of J)
    #[arg(long, default_value_t = DEFAULT_INIT_AMPLITUDE_BOUND)]
    pub init_bound: f64,
    /// BFGS iteration cap per restart
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    pub max_iter: usize,
    /// Gradient max-norm at which a restart counts as converged
    #[arg(long, default_value_t = DEFAULT_GRADIENT_TOLERANCE)]
    pub grad_tol: f64,
}

impl OptimizerFlags {
    fn settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            restarts: self.restarts,
            init_amplitude_bound: self.init_bound,
            max_iterations: self.max_iter,
            gradient_tolerance: self.grad_tol,
            rng_seed: self.seed,
            stop_fidelity: None,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    /// Target gate: x, cnot or sqrtswap
    #[arg(long)]
    pub gate: GateKind,
    /// Number of spins
    #[arg(long, default_value_t = 3)]
    pub ns: usize,
    /// Anisotropy Δ
    #[arg(long)]
    pub delta: f64,
    /// Control scheme: xy, xz or x
    #[arg(long, default_value_t = ControlScheme::XyAlternating)]
    pub scheme: ControlScheme,
    /// Total gate time t_f (units of 1/J)
    #[arg(long)]
    pub tf: f64,
    /// Pulse count N_t
    #[arg(long)]
    pub nt: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerFlags,
    /// Result file (JSON)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 2 if the best fidelity is below this value
    #[arg(long)]
    pub require: Option<f64>,
}

pub fn optimize(args: &OptimizeArgs) -> anyhow::Result<Status> {
    let start = Instant::now();
    if args.tf.is_nan() || args.tf <= 0.0 {
        bail!("--tf must be positive");
    }
    args.scheme.check_pulse_count(args.nt)?;
    let model = SpinChainModel::new(args.ns, args.delta)?;
    let target = build_target(&model, args.gate)?;
    let config = OptimizationConfig::for_total_time(model, target, args.scheme, args.nt, args.tf)
        .with_settings(&args.optimizer.settings());
    let result = run_optimizer(&config)?;

    let name = format!(
        "{}_ns{}_delta{}_tf{}_nt{}.json",
        args.gate, args.ns, args.delta, args.tf, args.nt
    );
    let out = resolve_output(args.out.as_deref(), &name)?;
    SequenceFile::from_result(&model, args.gate, &result).write(&out)?;
    RunManifest::new(
        "optimize",
        args,
        Some(args.optimizer.seed),
        vec![out.clone()],
        start.elapsed(),
    )?
    .write_all()?;

    println!(
        "best fidelity {} (restart {} of {})",
        result.best_fidelity,
        result.best_restart + 1,
        result.per_restart_fidelities.len()
    );
    println!("wrote {}", out.display());
    match args.require {
        Some(req) if result.best_fidelity < req => {
            eprintln!("fidelity {} is below the required {req}", result.best_fidelity);
            Ok(Status::BelowThreshold)
        }
        _ => Ok(Status::Ok),
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LiedimArgs {
    #[arg(long, default_value_t = 3)]
    pub ns: usize,
    #[arg(long)]
    pub delta: f64,
    /// Control fields on spin 1: x, xy or xz
    #[arg(long, value_parser = parse_controls)]
    pub controls: ControlScheme,
    /// Also check that X on the last spin and the last-pair exchange lie in the x-only algebra
    #[arg(long)]
    pub check_x_reachability: bool,
    /// Include the orthonormal basis in the JSON report
    #[arg(long)]
    pub include_basis: bool,
    /// JSON report file
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_controls(s: &str) -> Result<ControlScheme, String> {
    match s {
        "x" => Ok(ControlScheme::XOnly),
        "xy" => Ok(ControlScheme::XyAlternating),
        "xz" => Ok(ControlScheme::XzAlternating),
        other => Err(format!("unknown controls '{other}' (expected x, xy or xz)")),
    }
}

pub fn liedim(args: &LiedimArgs) -> anyhow::Result<Status> {
    let start = Instant::now();
    let model = SpinChainModel::new(args.ns, args.delta)?;
    let report = dynamical_algebra(&model, args.controls)?;
    let verdict = if report.is_full() {
        "completely controllable"
    } else {
        "not completely controllable"
    };
    println!(
        "dimension {} / {}: {verdict}",
        report.dimension,
        report.full_dimension()
    );
    if report.truncated {
        println!("warning: closure stopped before the basis saturated");
    }

    let mut json = LieReportJson::new(&report, generator_labels(args.controls), args.include_basis);
    if args.check_x_reachability {
        let record = if args.controls == ControlScheme::XOnly {
            verify_x_reachability_with(&model, &report)?
        } else {
            verify_x_reachability(&model)?
        };
        println!(
            "X_{} in x-only algebra: {} (residual {:e})",
            args.ns, record.x_in_algebra, record.x_residual
        );
        println!(
            "exp(-i pi/2 X_{}) = -i X_{}: {} (error {:e})",
            args.ns, args.ns, record.exp_identity_holds, record.exp_identity_error
        );
        println!(
            "last-pair exchange in x-only algebra: {} (residual {:e})",
            record.exchange_in_algebra, record.exchange_residual
        );
        println!("X_{} reachable with x control: {}", args.ns, record.x_reachable());
        json.reachability = Some(record);
    }

    if let Some(out) = &args.out {
        let out = resolve_output(Some(out), "")?;
        std::fs::write(&out, serde_json::to_string_pretty(&json)? + "\n")
            .with_context(|| format!("writing {}", out.display()))?;
        RunManifest::new("liedim", args, None, vec![out.clone()], start.elapsed())?.write_all()?;
        println!("wrote {}", out.display());
    }
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub gate: GateKind,
    #[arg(long, default_value_t = ControlScheme::XyAlternating)]
    pub scheme: ControlScheme,
    #[arg(long, default_value_t = 3)]
    pub ns: usize,
    /// Anisotropies to scan, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub delta_list: Vec<f64>,
    /// Gate-time grid as lo:hi:step
    #[arg(long)]
    pub tf_range: String,
    /// A grid point succeeds when the best fidelity exceeds this value
    #[arg(long, default_value_t = DEFAULT_FIDELITY_THRESHOLD)]
    pub threshold: f64,
    /// Longest allowed segment; N_t is the smallest admissible count with T ≤ t-max
    #[arg(long, default_value_t = DEFAULT_MAX_SEGMENT_DURATION)]
    pub t_max: f64,
    /// Upper bound on N_t
    #[arg(long, default_value_t = DEFAULT_MAX_PULSES)]
    pub max_pulses: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerFlags,
    /// Trace file (CSV: delta,t_f,n_t,fidelity)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_range(s: &str) -> anyhow::Result<TimeGrid> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("expected lo:hi:step, got '{s}'");
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .with_context(|| format!("invalid number '{p}' in '{s}'"))
    };
    Ok(TimeGrid::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)?)
}

pub fn scan(args: &ScanArgs) -> anyhow::Result<Status> {
    let start = Instant::now();
    let grid = parse_range(&args.tf_range)?;
    let mut trace = Vec::new();
    for &delta in &args.delta_list {
        let config = MinimalTimeScanConfig {
            gate: args.gate,
            scheme: args.scheme,
            ns: args.ns,
            delta,
            fidelity_threshold: args.threshold,
            grid,
            policy: PulsePolicy {
                max_segment_duration: args.t_max,
                max_pulses: args.max_pulses,
            },
            optimizer: args.optimizer.settings(),
        };
        let outcome = minimal_gate_time(&config)?;
        match (&outcome.minimal_time, outcome.trace.last()) {
            (Some(t_f), Some(p)) => {
                println!(
                    "delta {delta}: minimal t_f = {t_f} (N_t = {}, F = {})",
                    p.n_t, p.fidelity
                )
            }
            _ => println!("delta {delta}: no grid point exceeded F = {}", args.threshold),
        }
        trace.extend(outcome.trace);
    }

    let name = format!("scan_{}_{}.csv", args.gate, args.scheme);
    let out = resolve_output(args.out.as_deref(), &name)?;
    experiments::write_scan_csv(create(&out)?, &trace)?;
    RunManifest::new(
        "scan",
        args,
        Some(args.optimizer.seed),
        vec![out.clone()],
        start.elapsed(),
    )?
    .write_all()?;
    println!("wrote {}", out.display());
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RobustnessArgs {
    /// Sequence file written by `optimize`
    #[arg(long)]
    pub sequence: PathBuf,
    /// Noise half-widths δ, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub delta_noise_list: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_NOISE_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Statistics file (CSV: delta_noise,mean,std,stderr,n)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_sequence(path: &Path) -> anyhow::Result<SequenceFile> {
    SequenceFile::read(path).with_context(|| format!("reading sequence file {}", path.display()))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into())
}

pub fn robustness(args: &RobustnessArgs) -> anyhow::Result<Status> {
    let start = Instant::now();
    let file = read_sequence(&args.sequence)?;
    let config = RobustnessConfig {
        model: file.model()?,
        target: file.target()?,
        sequence: file.sequence.clone(),
        delta_noise: args.delta_noise_list.clone(),
        samples: args.samples,
        rng_seed: args.seed,
    };
    let stats = noise_robustness(&config)?;
    for s in &stats {
        println!(
            "delta {}: mean {} std {} stderr {} (n = {})",
            s.delta_noise, s.mean, s.std, s.stderr, s.n
        );
    }

    let out = resolve_output(args.out.as_deref(), &format!("robustness_{}.csv", stem(&args.sequence)))?;
    experiments::write_robustness_csv(create(&out)?, &stats)?;
    RunManifest::new("robustness", args, Some(args.seed), vec![out.clone()], start.elapsed())?.write_all()?;
    println!("wrote {}", out.display());
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RisetimeArgs {
    /// Sequence file written by `optimize`
    #[arg(long)]
    pub sequence: PathBuf,
    /// Rise times τ, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub tau_list: Vec<f64>,
    /// Integration steps per segment
    #[arg(long, default_value_t = 64)]
    pub substeps: usize,
    /// Sweep file (CSV: tau,fidelity)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn risetime(args: &RisetimeArgs) -> anyhow::Result<Status> {
    let start = Instant::now();
    let file = read_sequence(&args.sequence)?;
    let points = rise_time_sweep(
        &file.system()?,
        &file.sequence,
        &file.target()?,
        &args.tau_list,
        args.substeps,
    )?;
    println!("stored fidelity {}", file.fidelity);
    for p in &points {
        println!("tau {}: fidelity {}", p.tau, p.fidelity);
    }

    let out = resolve_output(args.out.as_deref(), &format!("risetime_{}.csv", stem(&args.sequence)))?;
    experiments::write_rise_time_csv(create(&out)?, &points)?;
    RunManifest::new("risetime", args, None, vec![out.clone()], start.elapsed())?.write_all()?;
    println!("wrote {}", out.display());
    Ok(Status::Ok)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LadderArgs {
    #[arg(long)]
    pub gate: GateKind,
    #[arg(long, default_value_t = 3)]
    pub ns: usize,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = ControlScheme::XyAlternating)]
    pub scheme: ControlScheme,
    /// Fixed total time t_f
    #[arg(long)]
    pub tf: f64,
    /// Pulse counts, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    pub nt_list: Vec<usize>,
    /// Seed each rung with the previous optimum resampled onto the finer grid
    #[arg(long)]
    pub warm_start: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub optimizer: OptimizerFlags,
    /// Ladder file (CSV: n_t,fidelity)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn ladder(args: &LadderArgs) -> anyhow::Result<Status> {
    let start = Instant::now();
    let config = LadderConfig {
        model: SpinChainModel::new(args.ns, args.delta)?,
        gate: args.gate,
        scheme: args.scheme,
        total_time: args.tf,
        pulse_counts: args.nt_list.clone(),
        optimizer: args.optimizer.settings(),
        warm_start: args.warm_start,
    };
    let points = fidelity_ladder(&config)?;
    for p in &points {
        println!("N_t {}: fidelity {}", p.n_t, p.fidelity);
    }

    let name = format!("ladder_{}_delta{}_tf{}.csv", args.gate, args.delta, args.tf);
    let out = resolve_output(args.out.as_deref(), &name)?;
    experiments::write_ladder_csv(create(&out)?, &points)?;
    RunManifest::new(
        "ladder",
        args,
        Some(args.optimizer.seed),
        vec![out.clone()],
        start.elapsed(),
    )?
    .write_all()?;
    println!("wrote {}", out.display());
    Ok(Status::Ok)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}
