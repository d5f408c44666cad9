//! Spin-1/2 operators, the XXZ drift Hamiltonian, single-site controls and
//! target gates on the full `2^ns`-dimensional Hilbert space.
//!
//! Basis ordering: site 1 is the most significant qubit of the computational
//! basis index, so `S_{1,a} = σ_a/2 ⊗ 1 ⊗ … ⊗ 1`. Units are `ħ = 1` with
//! energies in units of `J` and times in units of `1/J`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, c, hermiticity_defect, identity, kron, unitarity_defect, CMatrix};
use crate::matrix_json::MatrixJson;

/// Chain lengths above this are accepted but warned about: dense matrices of
/// dimension `2^ns` get expensive quickly.
pub const DENSE_WARN_NS: usize = 8;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// `σ_a / 2`.
    pub fn half_pauli(self) -> CMatrix {
        let (a, b, cc, d) = match self {
            Axis::X => (c(0.0, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0)),
            Axis::Y => (c(0.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.0, 0.0)),
            Axis::Z => (c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)),
        };
        CMatrix::from_row_slice(2, 2, &[a, b, cc, d])
    }

    pub fn pauli(self) -> CMatrix {
        self.half_pauli().scale(2.0)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => invalid(format!("unknown axis '{other}'")),
        }
    }
}

/// An XXZ chain of `ns` spins with coupling `j` and anisotropy `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinChainModel {
    ns: usize,
    delta: f64,
    j: f64,
}

impl SpinChainModel {
    /// Chain with `J = 1`.
    pub fn new(ns: usize, delta: f64) -> Result<Self> {
        Self::with_coupling(ns, delta, 1.0)
    }

    pub fn with_coupling(ns: usize, delta: f64, j: f64) -> Result<Self> {
        if ns < 2 {
            return invalid(format!("chain length must be at least 2, got {ns}"));
        }
        if ns >= usize::BITS as usize / 2 {
            return invalid(format!("chain length {ns} is too large for a dense representation"));
        }
        if !(j.is_finite() && j > 0.0) {
            return invalid(format!("coupling J must be positive, got {j}"));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return invalid(format!("anisotropy must be positive, got {delta}"));
        }
        if ns > DENSE_WARN_NS {
            log::warn!("dense model with ns = {ns} has dimension {}", 1usize << ns);
        }
        Ok(Self { ns, delta, j })
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    /// Hilbert-space dimension `2^ns`.
    pub fn dim(&self) -> usize {
        1 << self.ns
    }
}

/// A Hermitian matrix (Hamiltonian or spin operator).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    /// Wraps `m`, rejecting matrices that deviate from Hermiticity by more than 1e-10.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return invalid(format!("operator must be square, got {}x{}", m.nrows(), m.ncols()));
        }
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL {
            return invalid(format!("matrix is not Hermitian (max |H - H†| = {defect:e})"));
        }
        Ok(Self(m))
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

    /// `self + amplitude · other`.
    pub fn add_scaled(&self, other: &HermitianOperator, amplitude: f64) -> HermitianOperator {
        HermitianOperator(&self.0 + other.0.scale(amplitude))
    }

    /// The skew-Hermitian generator `−i·H`.
    pub fn to_generator(&self) -> CMatrix {
        self.0.map(|z| z * c(0.0, -1.0))
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    /// NOT on the last spin.
    #[serde(rename = "x")]
    XLast,
    /// CNOT on the last two spins (control = second to last).
    #[serde(rename = "cnot")]
    CnotLast2,
    /// √SWAP on the last two spins.
    #[serde(rename = "sqrtswap")]
    SqrtSwapLast2,
}

impl GateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::XLast => "x",
            GateKind::CnotLast2 => "cnot",
            GateKind::SqrtSwapLast2 => "sqrtswap",
        }
    }

    fn qubits(self) -> usize {
        match self {
            GateKind::XLast => 1,
            GateKind::CnotLast2 | GateKind::SqrtSwapLast2 => 2,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" | "not" => Ok(GateKind::XLast),
            "cnot" => Ok(GateKind::CnotLast2),
            "sqrtswap" | "sqrt-swap" => Ok(GateKind::SqrtSwapLast2),
            other => invalid(format!("unknown gate '{other}' (expected x, cnot or sqrtswap)")),
        }
    }
}

/// A unitary target acting on the full chain.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetGate {
    kind: Option<GateKind>,
    matrix: CMatrix,
}

impl TargetGate {
    /// Arbitrary unitary target, e.g. a free-evolution operator.
    pub fn custom(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return invalid("target must be square");
        }
        let defect = unitarity_defect(&matrix);
        if defect > 1e-9 {
            return invalid(format!("target is not unitary (max |U†U - I| = {defect:e})"));
        }
        Ok(Self { kind: None, matrix })
    }

    /// `None` for custom targets.
    pub fn kind(&self) -> Option<GateKind> {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.matrix)
    }
}

/// `S_{site,axis}` with `site` counted from 1.
pub fn spin_operator(model: &SpinChainModel, site: usize, axis: Axis) -> Result<HermitianOperator> {
    site_operator(model.ns(), site, axis).map(HermitianOperator)
}

/// Same as [`spin_operator`] without the chain-length restriction of the model
/// (single spins are allowed here).
pub fn site_operator(ns: usize, site: usize, axis: Axis) -> Result<CMatrix> {
    if site == 0 || site > ns {
        return invalid(format!("site {site} out of range 1..={ns}"));
    }
    Ok(embed(ns, site, &axis.half_pauli()))
}

/// Places the `2^k`-dimensional `local` operator on sites `first..first+k-1`.
fn embed(ns: usize, first: usize, local: &CMatrix) -> CMatrix {
    let k = local.nrows().trailing_zeros() as usize;
    let left = identity(1 << (first - 1));
    let right = identity(1 << (ns + 1 - first - k));
    kron(&kron(&left, local), &right)
}

/// `H_0 = J Σ_i (S_ix S_{i+1}x + S_iy S_{i+1}y + Δ S_iz S_{i+1}z)`.
pub fn build_h0(model: &SpinChainModel) -> HermitianOperator {
    let ns = model.ns();
    let bond = {
        let mut b = CMatrix::zeros(4, 4);
        for (axis, weight) in [(Axis::X, 1.0), (Axis::Y, 1.0), (Axis::Z, model.delta())] {
            let s = axis.half_pauli();
            b += kron(&s, &s).scale(weight);
        }
        b.scale(model.j())
    };
    let mut h = CMatrix::zeros(model.dim(), model.dim());
    for i in 1..ns {
        h += embed(ns, i, &bond);
    }
    HermitianOperator(h)
}

/// The control operator `S_{1,axis}`; the field term is `h · S_{1,axis}`.
pub fn build_control_operator(model: &SpinChainModel, axis: Axis) -> HermitianOperator {
    HermitianOperator(embed(model.ns(), 1, &axis.half_pauli()))
}

/// Total magnetization `Σ_i S_{i,z}`.
pub fn total_sz(model: &SpinChainModel) -> HermitianOperator {
    let mut m = CMatrix::zeros(model.dim(), model.dim());
    for site in 1..=model.ns() {
        m += embed(model.ns(), site, &Axis::Z.half_pauli());
    }
    HermitianOperator(m)
}

/// `X⊗X + Y⊗Y + Z⊗Z` on the last two sites.
pub fn exchange_last2(model: &SpinChainModel) -> HermitianOperator {
    HermitianOperator(embed(model.ns(), model.ns() - 1, &pauli_exchange()))
}

fn pauli_exchange() -> CMatrix {
    [Axis::X, Axis::Y, Axis::Z]
        .iter()
        .map(|a| kron(&a.pauli(), &a.pauli()))
        .fold(CMatrix::zeros(4, 4), |acc, m| acc + m)
}

fn cnot() -> CMatrix {
    let one = c(1.0, 0.0);
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = one;
    m[(1, 1)] = one;
    m[(2, 3)] = one;
    m[(3, 2)] = one;
    m
}

/// `e^{iπ/8} · exp(−i(π/8)(XX+YY+ZZ))`, evaluated spectrally.
fn sqrt_swap() -> CMatrix {
    let generator = pauli_exchange().scale(std::f64::consts::PI / 8.0);
    let u = linalg::eigh(&generator).exp_minus_i(1.0);
    u * Complex64::from_polar(1.0, std::f64::consts::PI / 8.0)
}

pub fn build_target(model: &SpinChainModel, kind: GateKind) -> Result<TargetGate> {
    if model.ns() < kind.qubits() {
        return invalid(format!("gate {kind} needs at least {} spins", kind.qubits()));
    }
    let local = match kind {
        GateKind::XLast => Axis::X.pauli(),
        GateKind::CnotLast2 => cnot(),
        GateKind::SqrtSwapLast2 => sqrt_swap(),
    };
    let first = model.ns() + 1 - kind.qubits();
    Ok(TargetGate {
        kind: Some(kind),
        matrix: embed(model.ns(), first, &local),
    })
}
