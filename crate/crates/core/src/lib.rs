//! Local quantum control of anisotropic XXZ Heisenberg spin-1/2 chains.
//!
//! Control fields act only on the first spin of the chain. The crate builds
//! the drift and control operators, propagates piecewise-constant pulse
//! sequences exactly, maximizes the gate fidelity with multi-start BFGS,
//! computes the dynamical Lie algebra to certify controllability, and runs
//! the robustness studies (amplitude noise, finite rise time).
//!
//! ```no_run
//! use xxz_control::{build_target, optimize, ControlScheme, GateKind, OptimizationConfig, SpinChainModel};
//!
//! let model = SpinChainModel::new(3, 5.0).unwrap();
//! let target = build_target(&model, GateKind::XLast).unwrap();
//! let config = OptimizationConfig::for_total_time(model, target, ControlScheme::XyAlternating, 26, 12.2);
//! let result = optimize(&config).unwrap();
//! println!("F = {}", result.best_fidelity);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bfgs;
pub mod controllability;
pub mod error;
pub mod experiments;
pub mod fidelity;
pub mod linalg;
pub mod matrix_json;
pub mod optimize;
pub mod propagator;
pub mod results;
pub mod seeding;
pub mod spin_model;

pub use controllability::{
    in_span, is_fully_controllable, lie_closure, verify_x_reachability, LieClosureReport, ReachabilityRecord,
};
pub use error::{Error, Result};
pub use experiments::{
    fidelity_ladder, minimal_gate_time, noise_robustness, rise_time_sweep, LadderConfig, MinimalTimeScanConfig,
    NoiseStats, RobustnessConfig, TimeGrid,
};
pub use fidelity::{fidelity_gradient, gate_fidelity};
pub use linalg::CMatrix;
pub use matrix_json::MatrixJson;
pub use optimize::{optimize, OptimizationConfig, OptimizationResult, OptimizerSettings};
pub use propagator::{
    expm_hermitian, propagate, propagate_with_rise_time, ControlScheme, ControlSystem, PulseSequence, UnitaryMatrix,
};
pub use results::SequenceFile;
pub use spin_model::{
    build_control_operator, build_h0, build_target, spin_operator, Axis, GateKind, HermitianOperator, SpinChainModel,
    TargetGate,
};
