//! Exact evolution under piecewise-constant control fields on the first spin.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, eigh, unitarity_defect, CMatrix};
use crate::spin_model::{build_control_operator, build_h0, Axis, HermitianOperator, SpinChainModel};

/// How control axes are assigned to consecutive segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlScheme {
    /// `x, y, x, y, …`; even pulse count.
    #[serde(rename = "xy")]
    XyAlternating,
    /// `x, z, x, z, …`; even pulse count.
    #[serde(rename = "xz")]
    XzAlternating,
    /// Every segment on `x`.
    #[serde(rename = "x")]
    XOnly,
}

impl ControlScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlScheme::XyAlternating => "xy",
            ControlScheme::XzAlternating => "xz",
            ControlScheme::XOnly => "x",
        }
    }

    /// Distinct control axes, in order of first use.
    pub fn control_axes(self) -> &'static [Axis] {
        match self {
            ControlScheme::XyAlternating => &[Axis::X, Axis::Y],
            ControlScheme::XzAlternating => &[Axis::X, Axis::Z],
            ControlScheme::XOnly => &[Axis::X],
        }
    }

    pub fn axis_of_segment(self, k: usize) -> Axis {
        let axes = self.control_axes();
        axes[k % axes.len()]
    }

    pub fn axes(self, n_t: usize) -> Vec<Axis> {
        (0..n_t).map(|k| self.axis_of_segment(k)).collect()
    }

    /// Pulse counts must be a multiple of this.
    pub fn parity(self) -> usize {
        self.control_axes().len()
    }

    pub fn check_pulse_count(self, n_t: usize) -> Result<()> {
        if n_t == 0 {
            return invalid("pulse count must be at least 1");
        }
        if !n_t.is_multiple_of(self.parity()) {
            return invalid(format!("scheme {self} needs an even pulse count, got {n_t}"));
        }
        Ok(())
    }

    /// Smallest admissible pulse count `≥ n`.
    pub fn round_up_count(self, n: usize) -> usize {
        let p = self.parity();
        n.max(1).div_ceil(p) * p
    }
}

impl fmt::Display for ControlScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControlScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(ControlScheme::XyAlternating),
            "xz" => Ok(ControlScheme::XzAlternating),
            "x" => Ok(ControlScheme::XOnly),
            other => invalid(format!("unknown control scheme '{other}' (expected xy, xz or x)")),
        }
    }
}

/// A piecewise-constant pulse train: segment `k` applies `amplitudes[k]` along
/// `axes[k]` for `segment_duration`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSequence", into = "RawSequence")]
pub struct PulseSequence {
    scheme: ControlScheme,
    segment_duration: f64,
    axes: Vec<Axis>,
    amplitudes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSequence {
    scheme: ControlScheme,
    #[serde(rename = "T")]
    segment_duration: f64,
    axes: Vec<Axis>,
    amplitudes: Vec<f64>,
}

impl TryFrom<RawSequence> for PulseSequence {
    type Error = Error;

    fn try_from(raw: RawSequence) -> Result<Self> {
        PulseSequence::from_parts(raw.scheme, raw.segment_duration, raw.axes, raw.amplitudes)
    }
}

impl From<PulseSequence> for RawSequence {
    fn from(s: PulseSequence) -> Self {
        RawSequence {
            scheme: s.scheme,
            segment_duration: s.segment_duration,
            axes: s.axes,
            amplitudes: s.amplitudes,
        }
    }
}

impl PulseSequence {
    /// Axes follow from the scheme.
    pub fn new(scheme: ControlScheme, segment_duration: f64, amplitudes: Vec<f64>) -> Result<Self> {
        let axes = scheme.axes(amplitudes.len());
        Self::from_parts(scheme, segment_duration, axes, amplitudes)
    }

    pub fn zeros(scheme: ControlScheme, segment_duration: f64, n_t: usize) -> Result<Self> {
        Self::new(scheme, segment_duration, vec![0.0; n_t])
    }

    pub fn from_parts(
        scheme: ControlScheme,
        segment_duration: f64,
        axes: Vec<Axis>,
        amplitudes: Vec<f64>,
    ) -> Result<Self> {
        if !(segment_duration.is_finite() && segment_duration > 0.0) {
            return invalid(format!("segment duration must be positive, got {segment_duration}"));
        }
        if axes.len() != amplitudes.len() {
            return invalid(format!("{} axes but {} amplitudes", axes.len(), amplitudes.len()));
        }
        scheme.check_pulse_count(amplitudes.len())?;
        if axes != scheme.axes(axes.len()) {
            return invalid(format!("axes do not follow the {scheme} pattern"));
        }
        if let Some(bad) = amplitudes.iter().find(|a| !a.is_finite()) {
            return invalid(format!("non-finite amplitude {bad}"));
        }
        Ok(Self {
            scheme,
            segment_duration,
            axes,
            amplitudes,
        })
    }

    pub fn scheme(&self) -> ControlScheme {
        self.scheme
    }

    pub fn segment_duration(&self) -> f64 {
        self.segment_duration
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn n_t(&self) -> usize {
        self.amplitudes.len()
    }

    /// `t_f = N_t · T`.
    pub fn total_time(&self) -> f64 {
        self.n_t() as f64 * self.segment_duration
    }

    /// Same axes and duration, new amplitudes.
    pub fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != self.n_t() {
            return invalid(format!("expected {} amplitudes, got {}", self.n_t(), amplitudes.len()));
        }
        Self::from_parts(self.scheme, self.segment_duration, self.axes.clone(), amplitudes)
    }
}

/// A unitary evolution operator.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    /// Wraps `m`, rejecting matrices with `max |U†U − I| > 1e-9`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return invalid("unitary must be square");
        }
        let defect = unitarity_defect(&m);
        if defect > 1e-9 {
            return invalid(format!("matrix is not unitary (defect {defect:e})"));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(linalg::identity(dim))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.0)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// `self · rhs`.
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Self {
        Self(&self.0 * &rhs.0)
    }
}

/// `exp(−i·h·t)` through the eigendecomposition of `h`.
pub fn expm_hermitian(h: &HermitianOperator, t: f64) -> Result<UnitaryMatrix> {
    if !t.is_finite() {
        return invalid(format!("duration must be finite, got {t}"));
    }
    Ok(UnitaryMatrix(eigh(h.matrix()).exp_minus_i(t)))
}

/// Drift plus the three possible first-spin controls of one chain, built once
/// and reused for every propagation.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    model: SpinChainModel,
    h0: HermitianOperator,
    controls: [HermitianOperator; 3],
}

impl ControlSystem {
    pub fn new(model: SpinChainModel) -> Self {
        let h0 = build_h0(&model);
        Self::with_drift(model, h0).expect("drift built from the model has matching dimension")
    }

    pub fn with_drift(model: SpinChainModel, h0: HermitianOperator) -> Result<Self> {
        if h0.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: h0.dim(),
            });
        }
        Ok(Self {
            model,
            h0,
            controls: [Axis::X, Axis::Y, Axis::Z].map(|a| build_control_operator(&model, a)),
        })
    }

    pub fn model(&self) -> &SpinChainModel {
        &self.model
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn control(&self, axis: Axis) -> &HermitianOperator {
        &self.controls[axis_index(axis)]
    }

    /// `H_0 + amplitude · S_{1,axis}`.
    pub fn segment_hamiltonian(&self, axis: Axis, amplitude: f64) -> CMatrix {
        self.h0.matrix() + self.control(axis).matrix().scale(amplitude)
    }

    /// `H_0 + Σ_a fields[a] · S_{1,a}` over x, y, z.
    fn field_hamiltonian(&self, fields: &[f64; 3]) -> CMatrix {
        let mut h = self.h0.matrix().clone();
        for (k, &f) in fields.iter().enumerate() {
            if f != 0.0 {
                h += self.controls[k].matrix().scale(f);
            }
        }
        h
    }

    pub fn segment_unitary(&self, axis: Axis, amplitude: f64, duration: f64) -> CMatrix {
        eigh(&self.segment_hamiltonian(axis, amplitude)).exp_minus_i(duration)
    }

    /// `U(t_f) = U_{N_t} ⋯ U_1`.
    pub fn propagate(&self, seq: &PulseSequence) -> UnitaryMatrix {
        let t = seq.segment_duration();
        let mut u = linalg::identity(self.dim());
        for (&axis, &amp) in seq.axes().iter().zip(seq.amplitudes()) {
            u = self.segment_unitary(axis, amp, t) * u;
        }
        UnitaryMatrix(u)
    }

    /// Evolution with exponentially ramped fields; see [`propagate_with_rise_time`].
    pub fn propagate_with_rise_time(&self, seq: &PulseSequence, tau: f64, substeps: usize) -> Result<UnitaryMatrix> {
        RampedEvolution::new(tau, substeps)?.evolve(self, seq)
    }
}

fn axis_index(axis: Axis) -> usize {
    match axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    }
}

fn check_drift(model: &SpinChainModel, h0: &HermitianOperator) -> Result<()> {
    if h0.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: h0.dim(),
        });
    }
    Ok(())
}

/// Ideal piecewise-constant evolution `U(t_f) = U_{N_t} ⋯ U_2 U_1` with
/// `U_k = exp(−i(H_0 + h_k S_{1,a_k}) T)`.
pub fn propagate(model: &SpinChainModel, h0: &HermitianOperator, seq: &PulseSequence) -> Result<UnitaryMatrix> {
    check_drift(model, h0)?;
    Ok(ControlSystem::with_drift(*model, h0.clone())?.propagate(seq))
}

/// Evolution in which each field relaxes exponentially (time constant `tau`)
/// toward its commanded value instead of switching instantly.
///
/// Within segment `n` the active axis moves from the value it held at the end
/// of the previous segment toward `h_n`; every other axis decays toward zero.
/// All fields start at zero. `tau = 0` is the ideal step evolution.
pub fn propagate_with_rise_time(
    model: &SpinChainModel,
    h0: &HermitianOperator,
    seq: &PulseSequence,
    tau: f64,
    substeps: usize,
) -> Result<UnitaryMatrix> {
    check_drift(model, h0)?;
    ControlSystem::with_drift(*model, h0.clone())?.propagate_with_rise_time(seq, tau, substeps)
}

/// Fields closer than `e^{-RAMP_WINDOW}` to their asymptote are treated as settled.
const RAMP_WINDOW: f64 = 36.0;

/// Product integrator for the ramped fields.
///
/// Each segment is cut at `min(T, RAMP_WINDOW·τ)`: the transient part is split
/// into `substeps` equal steps, each advanced with the fourth-order
/// commutator-free Magnus rule (two exponentials at the Gauss points), and the
/// settled remainder is a single exact exponential.
#[derive(Debug, Clone, Copy)]
pub struct RampedEvolution {
    tau: f64,
    substeps: usize,
}

impl RampedEvolution {
    pub fn new(tau: f64, substeps: usize) -> Result<Self> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return invalid(format!("rise time must be a non-negative finite number, got {tau}"));
        }
        if substeps == 0 {
            return invalid("substeps must be at least 1");
        }
        Ok(Self { tau, substeps })
    }

    /// Field values `s` time units into a segment that started from `start`
    /// with `axis` commanded to `target`.
    fn fields_at(&self, start: &[f64; 3], axis: Axis, target: f64, s: f64) -> [f64; 3] {
        let decay = (-s / self.tau).exp();
        let active = axis_index(axis);
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = if k == active {
                target + (start[k] - target) * decay
            } else {
                start[k] * decay
            };
        }
        out
    }

    pub fn evolve(&self, system: &ControlSystem, seq: &PulseSequence) -> Result<UnitaryMatrix> {
        if self.tau == 0.0 {
            return Ok(system.propagate(seq));
        }
        let t_seg = seq.segment_duration();
        let window = t_seg.min(RAMP_WINDOW * self.tau);
        let dt = window / self.substeps as f64;
        let gauss = 3f64.sqrt() / 6.0;
        let (c1, c2) = (0.5 - gauss, 0.5 + gauss);
        let a1 = (3.0 - 2.0 * 3f64.sqrt()) / 12.0;
        let a2 = (3.0 + 2.0 * 3f64.sqrt()) / 12.0;

        let mut u = linalg::identity(system.dim());
        let mut fields = [0.0f64; 3];
        for (&axis, &target) in seq.axes().iter().zip(seq.amplitudes()) {
            for k in 0..self.substeps {
                let s0 = k as f64 * dt;
                let h1 = system.field_hamiltonian(&self.fields_at(&fields, axis, target, s0 + c1 * dt));
                let h2 = system.field_hamiltonian(&self.fields_at(&fields, axis, target, s0 + c2 * dt));
                let first = eigh(&(h1.scale(a2) + h2.scale(a1))).exp_minus_i(dt);
                let second = eigh(&(h1.scale(a1) + h2.scale(a2))).exp_minus_i(dt);
                u = second * first * u;
            }
            let rest = t_seg - window;
            if rest > 0.0 {
                let settled = self.fields_at(&fields, axis, target, window + 0.5 * rest);
                u = eigh(&system.field_hamiltonian(&settled)).exp_minus_i(rest) * u;
            }
            fields = self.fields_at(&fields, axis, target, t_seg);
        }
        Ok(UnitaryMatrix(u))
    }
}
