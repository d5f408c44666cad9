//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! `XXZ_ACCEPTANCE=1,2,6` restricts the run to the listed criteria.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use common::{fidelity, finite_difference_gradient, gradient_error, in_pool, random_hermitian, taylor_expm};
use xxz_control::controllability::{dynamical_algebra, verify_x_reachability};
use xxz_control::fidelity::fidelity_and_gradient;
use xxz_control::linalg::max_abs_diff;
use xxz_control::seeding::stream;
use xxz_control::*;

type Criterion = (u32, &'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn model(ns: usize, delta: f64) -> SpinChainModel {
    SpinChainModel::new(ns, delta).unwrap()
}

fn lie_dimensions() -> Verdict {
    let cases = [
        (ControlScheme::XyAlternating, 1.2, 63),
        (ControlScheme::XOnly, 1.2, 30),
        (ControlScheme::XOnly, 1.0, 18),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (scheme, delta, expected) in cases {
        let dim = dynamical_algebra(&model(3, delta), scheme).unwrap().dimension;
        pass &= dim == expected;
        parts.push(format!("{scheme} Δ={delta}: {dim} (expected {expected})"));
    }
    verdict(pass, parts.join("; "))
}

fn reachability() -> Verdict {
    let r = verify_x_reachability(&model(3, 1.2)).unwrap();
    let pass = r.x_residual < 1e-8 && r.exchange_residual < 1e-8 && r.exp_identity_error < 1e-10;
    verdict(
        pass,
        format!(
            "X_3 residual {:.1e}, exchange residual {:.1e}, exp identity error {:.1e}",
            r.x_residual, r.exchange_residual, r.exp_identity_error
        ),
    )
}

const LADDER_REFERENCE: [(usize, f64); 7] = [
    (10, 0.455),
    (20, 0.697),
    (30, 0.837),
    (40, 0.953),
    (50, 0.995),
    (60, 1.0 - 1e-4),
    (70, 1.0 - 1e-8),
];

fn ladder_settings() -> OptimizerSettings {
    OptimizerSettings {
        restarts: 50,
        rng_seed: 2010,
        ..OptimizerSettings::default()
    }
}

fn fidelity_ladder_check() -> Verdict {
    let config = LadderConfig {
        model: model(3, 1.3),
        gate: GateKind::CnotLast2,
        scheme: ControlScheme::XyAlternating,
        total_time: 30.0,
        pulse_counts: LADDER_REFERENCE.iter().map(|&(n, _)| n).collect(),
        optimizer: ladder_settings(),
        warm_start: false,
    };
    let points = fidelity_ladder(&config).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, &(n_t, reference)) in points.iter().zip(&LADDER_REFERENCE) {
        let ok = if n_t <= 50 {
            p.fidelity >= reference - 0.05
        } else {
            p.fidelity > 0.999
        };
        pass &= ok;
        parts.push(format!("N_t={n_t}: {:.6} (reference {reference})", p.fidelity));
    }
    verdict(pass, parts.join("; "))
}

struct TimeEntry {
    gate: GateKind,
    scheme: ControlScheme,
    delta: f64,
    reference: f64,
    tolerance: f64,
}

fn minimal_times() -> Verdict {
    let entries = [
        TimeEntry {
            gate: GateKind::XLast,
            scheme: ControlScheme::XyAlternating,
            delta: 5.0,
            reference: 12.2,
            tolerance: 1.0,
        },
        TimeEntry {
            gate: GateKind::SqrtSwapLast2,
            scheme: ControlScheme::XyAlternating,
            delta: 1.0,
            reference: 1.5,
            tolerance: 0.2,
        },
        TimeEntry {
            gate: GateKind::CnotLast2,
            scheme: ControlScheme::XyAlternating,
            delta: 5.0,
            reference: 11.2,
            tolerance: 1.5,
        },
        TimeEntry {
            gate: GateKind::XLast,
            scheme: ControlScheme::XOnly,
            delta: 10.0,
            reference: 15.8,
            tolerance: 1.5,
        },
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for e in entries {
        // The grid starts below the tolerance window so a premature success is caught.
        let start = ((e.reference - e.tolerance - 0.3) * 10.0).round() / 10.0;
        let stop = e.reference + e.tolerance + 0.5;
        let grid = TimeGrid::new(start.max(0.1), stop, 0.1).unwrap();
        let mut config = MinimalTimeScanConfig::new(e.gate, e.scheme, e.delta, grid);
        config.optimizer.rng_seed = 2010;
        let outcome = minimal_gate_time(&config).unwrap();
        let ok = outcome
            .minimal_time
            .is_some_and(|t| (t - e.reference).abs() <= e.tolerance + 1e-9);
        pass &= ok;
        let found = outcome.minimal_time.map_or("none".to_string(), |t| format!("{t}"));
        parts.push(format!(
            "{} {} Δ={}: {found} (reference {} ± {})",
            e.gate, e.scheme, e.delta, e.reference, e.tolerance
        ));
    }
    verdict(pass, parts.join("; "))
}

/// A CNOT_3 sequence with F > 0.999 at Δ = 1.3, t_f = 30, N_t = 70.
fn optimal_cnot() -> (SpinChainModel, TargetGate, PulseSequence, f64) {
    let m = model(3, 1.3);
    let target = build_target(&m, GateKind::CnotLast2).unwrap();
    let mut config = OptimizationConfig::for_total_time(m, target.clone(), ControlScheme::XyAlternating, 70, 30.0)
        .with_settings(&ladder_settings());
    config.stop_fidelity = Some(0.999);
    let result = optimize(&config).unwrap();
    (m, target, result.sequence, result.best_fidelity)
}

fn noise_saturation() -> Verdict {
    let (m, target, sequence, ideal) = optimal_cnot();
    let config = RobustnessConfig {
        model: m,
        target,
        sequence,
        delta_noise: vec![0.0, 3.0],
        samples: 1000,
        rng_seed: 11,
    };
    let stats = noise_robustness(&config).unwrap();
    let pass = ideal > 0.999 && stats[0].mean == ideal && (stats[1].mean - 0.125).abs() <= 0.02;
    verdict(
        pass,
        format!(
            "ideal F={ideal:.8}; δ=0 mean {} (exact: {}); δ=3 mean {:.4} ± {:.4} (target 0.125 ± 0.02)",
            stats[0].mean,
            stats[0].mean == ideal,
            stats[1].mean,
            stats[1].stderr
        ),
    )
}

fn property_suite() -> Verdict {
    let mut failures = Vec::new();
    let mut rng = stream(6, &[]);

    let system = ControlSystem::new(model(3, 1.2));
    let amps: Vec<f64> = (0..200).map(|_| rng.gen_range(-20.0..20.0)).collect();
    let mut worst_unitarity = 0.0f64;
    for n_t in [2, 20, 100, 200] {
        let seq = PulseSequence::new(ControlScheme::XyAlternating, 0.5, amps[..n_t].to_vec()).unwrap();
        worst_unitarity = worst_unitarity.max(system.propagate(&seq).unitarity_defect());
    }
    if worst_unitarity >= 1e-9 {
        failures.push(format!("unitarity {worst_unitarity:e}"));
    }

    let mut worst_expm = 0.0f64;
    for _ in 0..20 {
        let h = random_hermitian(&mut rng, 8, 3.0);
        let t = rng.gen_range(0.1..2.0);
        let u = expm_hermitian(&HermitianOperator::new(h.clone()).unwrap(), t).unwrap();
        worst_expm = worst_expm.max(max_abs_diff(u.matrix(), &taylor_expm(&h, t)));
    }
    if worst_expm >= 1e-9 {
        failures.push(format!("expm vs Taylor {worst_expm:e}"));
    }

    let m = model(3, 1.3);
    let cnot = build_target(&m, GateKind::CnotLast2).unwrap();
    let system = ControlSystem::new(m);
    let mut worst_grad = 0.0f64;
    for _ in 0..20 {
        let n_t = 2 * rng.gen_range(2..10);
        let a: Vec<f64> = (0..n_t).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let seq = PulseSequence::new(ControlScheme::XyAlternating, rng.gen_range(0.2..0.8), a).unwrap();
        let (_, grad) = fidelity_and_gradient(&system, &seq, &cnot).unwrap();
        worst_grad = worst_grad.max(gradient_error(
            &grad,
            &finite_difference_gradient(&system, &seq, &cnot, 1e-5),
        ));
    }
    if worst_grad >= 1e-6 {
        failures.push(format!("gradient {worst_grad:e}"));
    }

    let seq = PulseSequence::new(ControlScheme::XyAlternating, 0.4, amps[..12].to_vec()).unwrap();
    let u = system.propagate(&seq);
    let phase = num_complex::Complex64::from_polar(1.0, 0.83);
    let phased = UnitaryMatrix::new(u.matrix().map(|z| z * phase)).unwrap();
    let phase_err = (fidelity(&u, &cnot) - fidelity(&phased, &cnot)).abs();
    if phase_err >= 1e-12 {
        failures.push(format!("global phase {phase_err:e}"));
    }

    let coarse = PulseSequence::new(ControlScheme::XOnly, 0.6, amps[..5].to_vec()).unwrap();
    let fine_amps: Vec<f64> = amps[..5].iter().flat_map(|&a| [a, a]).collect();
    let fine = PulseSequence::new(ControlScheme::XOnly, 0.3, fine_amps).unwrap();
    let split_err = max_abs_diff(system.propagate(&coarse).matrix(), system.propagate(&fine).matrix());
    if split_err >= 1e-10 {
        failures.push(format!("segment splitting {split_err:e}"));
    }

    let mut opt = OptimizationConfig::for_total_time(m, cnot.clone(), ControlScheme::XyAlternating, 10, 5.0);
    opt.restarts = 6;
    opt.max_iterations = 50;
    opt.rng_seed = 3;
    let a = in_pool(2, || optimize(&opt).unwrap());
    let b = in_pool(8, || optimize(&opt).unwrap());
    if a.per_restart_fidelities != b.per_restart_fidelities || a.best_amplitudes != b.best_amplitudes {
        failures.push("optimize differs between 2 and 8 threads".into());
    }
    let noise = RobustnessConfig {
        model: m,
        target: cnot,
        sequence: seq,
        delta_noise: vec![0.5, 2.0],
        samples: 200,
        rng_seed: 4,
    };
    if in_pool(2, || noise_robustness(&noise).unwrap()) != in_pool(8, || noise_robustness(&noise).unwrap()) {
        failures.push("noise statistics differ between 2 and 8 threads".into());
    }

    let summary = format!(
        "unitarity {worst_unitarity:.1e}, expm {worst_expm:.1e}, gradient {worst_grad:.1e}, phase {phase_err:.1e}, \
         splitting {split_err:.1e}, thread determinism checked"
    );
    if failures.is_empty() {
        verdict(true, summary)
    } else {
        verdict(false, format!("{summary}; failures: {}", failures.join(", ")))
    }
}

fn rise_time_limits() -> Verdict {
    let (m, target, sequence, ideal) = optimal_cnot();
    let system = ControlSystem::new(m);
    let at_zero = fidelity(&system.propagate_with_rise_time(&sequence, 0.0, 64).unwrap(), &target);
    let zero_err = (at_zero - ideal).abs();
    let t = sequence.segment_duration();
    let mut worst = 0.0f64;
    for tau in [0.001, 0.01, 0.05, 0.1, 0.2, t] {
        let f64_ = fidelity(&system.propagate_with_rise_time(&sequence, tau, 64).unwrap(), &target);
        let f128 = fidelity(&system.propagate_with_rise_time(&sequence, tau, 128).unwrap(), &target);
        worst = worst.max((f64_ - f128).abs());
    }
    verdict(
        zero_err < 1e-9 && worst < 1e-6,
        format!("τ=0 error {zero_err:.1e}; worst 64→128 substep change {worst:.1e} for τ ≤ T={t:.4}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (1, "Lie dimensions", lie_dimensions),
        (2, "x-only reachability", reachability),
        (3, "CNOT_3 fidelity ladder", fidelity_ladder_check),
        (4, "minimal gate times", minimal_times),
        (5, "noise saturation", noise_saturation),
        (6, "property suite", property_suite),
        (7, "rise-time limits", rise_time_limits),
    ];
    let selected: Option<Vec<u32>> = std::env::var("XXZ_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|p| p.trim().parse().ok()).collect());

    let mut all_pass = true;
    for (id, name, check) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        all_pass &= v.pass;
        println!(
            "criterion {id} {}: {name} [{:.1} s] {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
