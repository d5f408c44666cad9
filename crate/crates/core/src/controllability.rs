//! Dynamical Lie algebra of the drift and control generators.
//!
//! The algebra is the real span of the skew-Hermitian generators closed under
//! commutation. Its basis is kept orthonormal under the Hilbert–Schmidt inner
//! product `⟨A, B⟩ = Re tr(A†B)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, commutator, hs_inner, hs_norm, CMatrix};
use crate::matrix_json::MatrixJson;
use crate::propagator::{expm_hermitian, ControlScheme};
use crate::spin_model::{build_control_operator, build_h0, exchange_last2, Axis, HermitianOperator, SpinChainModel};

/// Relative residual above which a commutator counts as a new direction.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

/// Safety cap on breadth-first generations.
const MAX_GENERATIONS: usize = 64;

const SKEW_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LieClosureReport {
    pub generator_count: usize,
    pub dimension: usize,
    /// Orthonormal, skew-Hermitian basis of the closure.
    pub basis: Vec<CMatrix>,
    /// The generation cap was hit before the span stopped growing.
    pub truncated: bool,
    matrix_dim: usize,
}

impl LieClosureReport {
    /// `d² − 1`, the dimension of `su(d)`.
    pub fn full_dimension(&self) -> usize {
        self.matrix_dim * self.matrix_dim - 1
    }

    pub fn is_full(&self) -> bool {
        self.dimension == self.full_dimension()
    }

    pub fn matrix_dim(&self) -> usize {
        self.matrix_dim
    }
}

fn check_generator(g: &CMatrix, dim: usize) -> Result<()> {
    if g.nrows() != dim || g.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: g.nrows(),
        });
    }
    let skew_defect = linalg::max_abs(&(g + g.adjoint()));
    if skew_defect > SKEW_TOL {
        return invalid(format!("generator is not skew-Hermitian (defect {skew_defect:e})"));
    }
    Ok(())
}

/// Removes the components of `v` along the orthonormal `basis`, twice.
fn orthogonalize(v: &mut CMatrix, basis: &[CMatrix]) {
    for _ in 0..2 {
        for b in basis {
            let coeff = hs_inner(b, v).re;
            if coeff != 0.0 {
                *v -= b.scale(coeff);
            }
        }
    }
}

/// Adds the part of `candidate` orthogonal to `basis` if it is significant.
///
/// `scale` is the norm the residual is measured against. Commutators of two
/// orthonormal basis elements use a scale of at least 1, so that round-off
/// in a vanishing commutator is not mistaken for a new direction.
fn try_insert(basis: &mut Vec<CMatrix>, mut candidate: CMatrix, tolerance: f64, scale: f64) -> bool {
    let norm = hs_norm(&candidate);
    if norm == 0.0 {
        return false;
    }
    orthogonalize(&mut candidate, basis);
    let residual = hs_norm(&candidate);
    if residual <= tolerance * norm.max(scale) {
        return false;
    }
    basis.push(candidate.unscale(residual));
    true
}

/// Closure of `generators` under commutators.
///
/// Generators must be skew-Hermitian and of a common dimension. Each new basis
/// element is commuted with every element of the basis; elements already
/// processed against each other are not revisited.
pub fn lie_closure(generators: &[CMatrix], tolerance: f64) -> Result<LieClosureReport> {
    let Some(first) = generators.first() else {
        return invalid("at least one generator is required");
    };
    if !(tolerance > 0.0) {
        return invalid("rank tolerance must be positive");
    }
    let dim = first.nrows();
    for g in generators {
        check_generator(g, dim)?;
    }
    let cap = dim * dim - 1;

    let mut basis: Vec<CMatrix> = Vec::new();
    for g in generators {
        try_insert(&mut basis, g.clone(), tolerance, 0.0);
    }
    let mut processed = 0;
    let mut generations = 0;
    while processed < basis.len() && generations < MAX_GENERATIONS {
        let frontier_end = basis.len();
        for i in processed..frontier_end {
            for j in 0..i {
                let c = commutator(&basis[i], &basis[j]);
                try_insert(&mut basis, c, tolerance, 1.0);
                if basis.len() > cap {
                    return Err(Error::Internal(format!(
                        "closure basis exceeded su({dim}) dimension {cap}"
                    )));
                }
            }
        }
        processed = frontier_end;
        generations += 1;
    }
    let truncated = processed < basis.len();
    if truncated {
        log::warn!("Lie closure stopped after {generations} generations with a growing basis");
    }

    Ok(LieClosureReport {
        generator_count: generators.len(),
        dimension: basis.len(),
        basis,
        truncated,
        matrix_dim: dim,
    })
}

/// `{−iH_0} ∪ {−iS_{1,a}}` for the scheme's control axes.
pub fn control_generators(model: &SpinChainModel, scheme: ControlScheme) -> Vec<CMatrix> {
    let mut gens = vec![build_h0(model).to_generator()];
    gens.extend(
        scheme
            .control_axes()
            .iter()
            .map(|&a| build_control_operator(model, a).to_generator()),
    );
    gens
}

pub fn dynamical_algebra(model: &SpinChainModel, scheme: ControlScheme) -> Result<LieClosureReport> {
    lie_closure(&control_generators(model, scheme), DEFAULT_RANK_TOLERANCE)
}

/// Whether the scheme's algebra is all of `su(d)`.
pub fn is_fully_controllable(model: &SpinChainModel, scheme: ControlScheme) -> Result<(bool, LieClosureReport)> {
    let report = dynamical_algebra(model, scheme)?;
    Ok((report.is_full(), report))
}

/// Relative norm of the part of `candidate` outside the span of the report's basis.
pub fn span_residual(report: &LieClosureReport, candidate: &CMatrix) -> Result<f64> {
    check_generator(candidate, report.matrix_dim)?;
    let norm = hs_norm(candidate);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut r = candidate.clone();
    orthogonalize(&mut r, &report.basis);
    Ok(hs_norm(&r) / norm)
}

pub fn in_span(report: &LieClosureReport, candidate: &CMatrix, tolerance: f64) -> Result<bool> {
    Ok(span_residual(report, candidate)? < tolerance)
}

/// Evidence that `X` on the last spin and `√SWAP` on the last two are
/// reachable with an x field alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachabilityRecord {
    /// `max |exp(−i(π/2)X_N) − (−i X_N)|`.
    pub exp_identity_error: f64,
    pub exp_identity_holds: bool,
    /// Relative residual of `−i(π/2)X_N` outside the x-only algebra.
    pub x_residual: f64,
    pub x_in_algebra: bool,
    /// Relative residual of `−i(XX+YY+ZZ)` on the last two spins.
    pub exchange_residual: f64,
    pub exchange_in_algebra: bool,
    pub algebra_dimension: usize,
}

impl ReachabilityRecord {
    pub fn x_reachable(&self) -> bool {
        self.exp_identity_holds && self.x_in_algebra
    }
}

pub fn verify_x_reachability(model: &SpinChainModel) -> Result<ReachabilityRecord> {
    let report = dynamical_algebra(model, ControlScheme::XOnly)?;
    verify_x_reachability_with(model, &report)
}

/// As [`verify_x_reachability`], reusing an x-only closure.
pub fn verify_x_reachability_with(model: &SpinChainModel, report: &LieClosureReport) -> Result<ReachabilityRecord> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let x_last = crate::spin_model::site_operator(model.ns(), model.ns(), Axis::X)?.scale(2.0);
    let x_op = HermitianOperator::new(x_last.clone())?;

    let exp = expm_hermitian(&x_op, half_pi)?;
    let minus_i_x = x_last.map(|z| z * linalg::c(0.0, -1.0));
    let exp_identity_error = linalg::max_abs_diff(exp.matrix(), &minus_i_x);

    let x_generator = x_op.to_generator().scale(half_pi);
    let x_residual = span_residual(report, &x_generator)?;
    let exchange_residual = span_residual(report, &exchange_last2(model).to_generator())?;

    Ok(ReachabilityRecord {
        exp_identity_error,
        exp_identity_holds: exp_identity_error < 1e-10,
        x_residual,
        x_in_algebra: x_residual < DEFAULT_RANK_TOLERANCE,
        exchange_residual,
        exchange_in_algebra: exchange_residual < DEFAULT_RANK_TOLERANCE,
        algebra_dimension: report.dimension,
    })
}

/// JSON form of a closure report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LieReportJson {
    pub generators: Vec<String>,
    pub generator_count: usize,
    pub dimension: usize,
    pub full_dimension: usize,
    pub completely_controllable: bool,
    pub truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reachability: Option<ReachabilityRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub basis: Option<Vec<MatrixJson>>,
}

impl LieReportJson {
    pub fn new(report: &LieClosureReport, generators: Vec<String>, include_basis: bool) -> Self {
        Self {
            generators,
            generator_count: report.generator_count,
            dimension: report.dimension,
            full_dimension: report.full_dimension(),
            completely_controllable: report.is_full(),
            truncated: report.truncated,
            reachability: None,
            basis: include_basis.then(|| report.basis.iter().map(MatrixJson::from_matrix).collect()),
        }
    }
}

/// Human-readable generator labels for a scheme.
pub fn generator_labels(scheme: ControlScheme) -> Vec<String> {
    let mut v = vec!["-iH0".to_string()];
    v.extend(scheme.control_axes().iter().map(|a| format!("-iS1{a}")));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn model(ns: usize, delta: f64) -> SpinChainModel {
        SpinChainModel::new(ns, delta).unwrap()
    }

    #[test]
    fn single_qubit_su2() {
        let gens: Vec<CMatrix> = [Axis::X, Axis::Y]
            .iter()
            .map(|a| a.half_pauli().map(|z| z * c(0.0, -1.0)))
            .collect();
        let r = lie_closure(&gens, DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(r.dimension, 3);
        assert!(r.is_full());
        assert!(!r.truncated);
    }

    #[test]
    fn rejects_hermitian_generator() {
        let h = Axis::X.half_pauli();
        assert!(lie_closure(&[h], 1e-8).is_err());
        assert!(lie_closure(&[], 1e-8).is_err());
    }

    #[test]
    fn rejects_mixed_dimensions() {
        let a = Axis::X.half_pauli().map(|z| z * c(0.0, -1.0));
        let b = build_h0(&model(2, 1.0)).to_generator();
        assert!(lie_closure(&[a, b], 1e-8).is_err());
    }

    #[test]
    fn two_spin_xz_is_complete() {
        let (full, r) = is_fully_controllable(&model(2, 1.5), ControlScheme::XzAlternating).unwrap();
        assert!(full);
        assert_eq!(r.dimension, 15);
    }

    #[test]
    fn basis_is_orthonormal_and_skew() {
        let r = dynamical_algebra(&model(3, 1.2), ControlScheme::XOnly).unwrap();
        for (i, a) in r.basis.iter().enumerate() {
            assert!(linalg::max_abs(&(a + a.adjoint())) < 1e-10);
            assert!(linalg::trace(a).norm() < 1e-10);
            for (j, b) in r.basis.iter().enumerate() {
                let ip = hs_inner(a, b).re;
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn y_control_not_in_x_only_algebra() {
        let m = model(3, 1.2);
        let r = dynamical_algebra(&m, ControlScheme::XOnly).unwrap();
        let sy = build_control_operator(&m, Axis::Y).to_generator();
        assert!(!in_span(&r, &sy, DEFAULT_RANK_TOLERANCE).unwrap());
        assert!(span_residual(&r, &sy).unwrap() > 0.1);
    }

    #[test]
    fn exp_identity_any_length() {
        for ns in 2..=4 {
            let rec = verify_x_reachability(&model(ns, 1.2)).unwrap();
            assert!(rec.exp_identity_error < 1e-12);
        }
    }
}
