//! JSON file format for optimized sequences.
//!
//! ```json
//! {"gate": "cnot", "ns": 3, "delta": 1.3, "j": 1.0, "fidelity": 0.999, "seed": 7,
//!  "sequence": {"scheme": "xy", "T": 0.5, "axes": [...], "amplitudes": [...]},
//!  "per_restart_fidelities": [...], "iterations_used": [...], "restart_status": [...]}
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::optimize::{OptimizationResult, RestartStatus};
use crate::propagator::{ControlSystem, PulseSequence};
use crate::spin_model::{build_target, GateKind, SpinChainModel, TargetGate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub gate: GateKind,
    pub ns: usize,
    pub delta: f64,
    #[serde(default = "unit_coupling")]
    pub j: f64,
    pub fidelity: f64,
    pub seed: u64,
    pub sequence: PulseSequence,
    #[serde(default)]
    pub per_restart_fidelities: Vec<f64>,
    #[serde(default)]
    pub iterations_used: Vec<usize>,
    #[serde(default)]
    pub restart_status: Vec<RestartStatus>,
}

fn unit_coupling() -> f64 {
    1.0
}

impl SequenceFile {
    pub fn from_result(model: &SpinChainModel, gate: GateKind, result: &OptimizationResult) -> Self {
        Self {
            gate,
            ns: model.ns(),
            delta: model.delta(),
            j: model.j(),
            fidelity: result.best_fidelity,
            seed: result.seed_used,
            sequence: result.sequence.clone(),
            per_restart_fidelities: result.per_restart_fidelities.clone(),
            iterations_used: result.iterations_used.clone(),
            restart_status: result.restart_status.clone(),
        }
    }

    pub fn model(&self) -> Result<SpinChainModel> {
        SpinChainModel::with_coupling(self.ns, self.delta, self.j)
    }

    pub fn target(&self) -> Result<TargetGate> {
        build_target(&self.model()?, self.gate)
    }

    pub fn system(&self) -> Result<ControlSystem> {
        Ok(ControlSystem::new(self.model()?))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: SequenceFile = serde_json::from_str(&text)?;
        if !(0.0..=1.0).contains(&file.fidelity) {
            return invalid(format!("stored fidelity {} is outside [0, 1]", file.fidelity));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_pretty()? + "\n")?;
        Ok(())
    }
}
