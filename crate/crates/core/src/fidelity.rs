//! Gate fidelity `F = |tr(U† U_target)| / d` and its exact gradient with
//! respect to the segment amplitudes.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, CMatrix};
use crate::propagator::{ControlSystem, PulseSequence, UnitaryMatrix};
use crate::spin_model::TargetGate;

/// Eigenvalue gaps below this use the analytic limit of the divided difference.
pub const DEGENERACY_GAP: f64 = 1e-10;

pub fn gate_fidelity(u: &UnitaryMatrix, target: &TargetGate) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: u.dim(),
        });
    }
    Ok(fidelity_of(u.matrix(), target.matrix()))
}

/// Clamped to `[0, 1]` against round-off.
pub(crate) fn fidelity_of(u: &CMatrix, target: &CMatrix) -> f64 {
    let d = u.nrows() as f64;
    (linalg::hs_inner(u, target).norm() / d).min(1.0)
}

/// Fidelity of a full pulse sequence against `target`.
pub fn sequence_fidelity(system: &ControlSystem, seq: &PulseSequence, target: &TargetGate) -> Result<f64> {
    gate_fidelity(&system.propagate(seq), target)
}

/// Evaluates `F` and `∂F/∂h_k` for all segments in one forward/backward sweep.
///
/// For segment `k` with `H_k = V diag(λ) V†`, the directional derivative of
/// `exp(−i H_k T)` along the control operator `S` is `V (Γ ∘ V†SV) V†` with
/// `Γ_mn = (e^{−iλ_m T} − e^{−iλ_n T}) / (λ_m − λ_n)` and `Γ_mm = −iT e^{−iλ_m T}`.
pub fn fidelity_and_gradient(
    system: &ControlSystem,
    seq: &PulseSequence,
    target: &TargetGate,
) -> Result<(f64, Vec<f64>)> {
    if system.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: system.dim(),
        });
    }
    let n = system.dim();
    let t = seq.segment_duration();

    struct Segment {
        vectors: CMatrix,
        phases: Vec<Complex64>,
        values: Vec<f64>,
        unitary: CMatrix,
    }

    let segments: Vec<Segment> = seq
        .axes()
        .iter()
        .zip(seq.amplitudes())
        .map(|(&axis, &amp)| {
            let eig = eigh(&system.segment_hamiltonian(axis, amp));
            let unitary = eig.exp_minus_i(t);
            let values: Vec<f64> = eig.values.iter().copied().collect();
            let phases = values.iter().map(|&l| Complex64::from_polar(1.0, -l * t)).collect();
            Segment {
                vectors: eig.vectors,
                phases,
                values,
                unitary,
            }
        })
        .collect();

    // forward[k] = U_k ⋯ U_1 (forward[0] = 1).
    let mut forward = Vec::with_capacity(segments.len() + 1);
    forward.push(linalg::identity(n));
    for seg in &segments {
        let next = &seg.unitary * forward.last().unwrap();
        forward.push(next);
    }

    // z = tr(U_target† U); F = |z| / d.
    let target_dag = target.matrix().adjoint();
    let z = linalg::trace(&(&target_dag * forward.last().unwrap()));
    let fidelity = (z.norm() / n as f64).min(1.0);
    if z.norm() == 0.0 {
        return Ok((fidelity, vec![0.0; segments.len()]));
    }
    let phase = z.conj() / z.norm();

    let mut grad = vec![0.0; segments.len()];
    // backward = U_target† U_N ⋯ U_{k+1}
    let mut backward = target_dag;
    for k in (0..segments.len()).rev() {
        let seg = &segments[k];
        let s = system.control(seq.axes()[k]).matrix();
        // dz/dh_k = tr(forward[k] · backward · dU_k) = Σ_mn M_nm Γ_mn S̃_mn with
        // M = V† (forward[k] · backward) V and S̃ = V† S V.
        let m = seg.vectors.adjoint() * (&forward[k] * &backward) * &seg.vectors;
        let s_eig = seg.vectors.adjoint() * s * &seg.vectors;
        let mut dz = Complex64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let gap = seg.values[a] - seg.values[b];
                let gamma = if gap.abs() < DEGENERACY_GAP {
                    Complex64::new(0.0, -t) * seg.phases[a]
                } else {
                    (seg.phases[a] - seg.phases[b]) / gap
                };
                dz += m[(b, a)] * gamma * s_eig[(a, b)];
            }
        }
        grad[k] = (phase * dz).re / n as f64;
        backward *= &seg.unitary;
    }
    Ok((fidelity, grad))
}

/// `∂F/∂h_k` for every segment.
pub fn fidelity_gradient(system: &ControlSystem, seq: &PulseSequence, target: &TargetGate) -> Result<Vec<f64>> {
    fidelity_and_gradient(system, seq, target).map(|(_, g)| g)
}
