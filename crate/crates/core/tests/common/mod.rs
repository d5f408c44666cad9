//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;

use xxz_control::linalg::{c, identity, CMatrix};
use xxz_control::{gate_fidelity, ControlSystem, PulseSequence, TargetGate, UnitaryMatrix};

/// `exp(−iHt)` by scaling and squaring a 30-term Taylor series.
pub fn taylor_expm(h: &CMatrix, t: f64) -> CMatrix {
    let a = h.map(|z| z * c(0.0, -t));
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = a.unscale(2f64.powi(squarings));
    let n = h.nrows();
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = &term * &a / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()).scale(0.5 * scale)
}

pub fn fidelity(u: &UnitaryMatrix, target: &TargetGate) -> f64 {
    gate_fidelity(u, target).unwrap()
}

/// Central differences of the fidelity with respect to each amplitude.
pub fn finite_difference_gradient(
    system: &ControlSystem,
    seq: &PulseSequence,
    target: &TargetGate,
    step: f64,
) -> Vec<f64> {
    let amps = seq.amplitudes().to_vec();
    (0..amps.len())
        .map(|k| {
            let shifted = |d: f64| {
                let mut a = amps.clone();
                a[k] += d;
                fidelity(&system.propagate(&seq.with_amplitudes(a).unwrap()), target)
            };
            (shifted(step) - shifted(-step)) / (2.0 * step)
        })
        .collect()
}

/// Largest componentwise error, relative to `max(|numeric_k|, ‖numeric‖_∞)`.
pub fn gradient_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    analytic
        .iter()
        .zip(numeric)
        .map(|(g, f)| (g - f).abs() / f.abs().max(scale))
        .fold(0.0, f64::max)
}

pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}
