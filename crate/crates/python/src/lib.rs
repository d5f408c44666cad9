//! Python bindings: `import pyxxz`.
//!
//! Matrices cross the boundary as nested lists of complex numbers. Long
//! computations release the GIL.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use xxz_control::controllability::{dynamical_algebra, verify_x_reachability};
use xxz_control::experiments::{
    PulsePolicy, DEFAULT_FIDELITY_THRESHOLD, DEFAULT_MAX_PULSES, DEFAULT_MAX_SEGMENT_DURATION,
};
use xxz_control::fidelity::fidelity_and_gradient;
use xxz_control::{
    self as core, build_control_operator, build_h0, build_target, minimal_gate_time, noise_robustness, rise_time_sweep,
    Axis, CMatrix, ControlScheme, ControlSystem, GateKind, MinimalTimeScanConfig, OptimizationConfig, RobustnessConfig,
    SequenceFile, SpinChainModel as CoreModel, TimeGrid,
};

/// `(delta_noise, mean, std, stderr, n)`.
type NoiseRow = (f64, f64, f64, f64, usize);
/// `(t_f, n_t, fidelity)`.
type ScanRow = (f64, usize, f64);

fn py_err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> PyResult<T> {
    s.parse()
        .map_err(|_| PyValueError::new_err(format!("unknown {what} '{s}'")))
}

fn to_rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// An `XXZ` chain of `ns` spins with anisotropy `delta` (J = 1).
#[pyclass(name = "SpinChainModel", frozen, from_py_object)]
#[derive(Clone)]
struct PySpinChainModel {
    inner: CoreModel,
}

#[pymethods]
impl PySpinChainModel {
    #[new]
    #[pyo3(signature = (ns=3, delta=1.0))]
    fn new(ns: usize, delta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: CoreModel::new(ns, delta).map_err(py_err)?,
        })
    }

    #[getter]
    fn ns(&self) -> usize {
        self.inner.ns()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Drift Hamiltonian as a nested list.
    fn h0(&self) -> Vec<Vec<Complex64>> {
        to_rows(build_h0(&self.inner).matrix())
    }

    /// Control operator `S_{1,axis}` for axis "x", "y" or "z".
    fn control(&self, axis: &str) -> PyResult<Vec<Vec<Complex64>>> {
        let axis: Axis = parse(axis, "axis")?;
        Ok(to_rows(build_control_operator(&self.inner, axis).matrix()))
    }

    /// Target unitary for gate "x", "cnot" or "sqrtswap".
    fn target(&self, gate: &str) -> PyResult<Vec<Vec<Complex64>>> {
        let gate: GateKind = parse(gate, "gate")?;
        Ok(to_rows(build_target(&self.inner, gate).map_err(py_err)?.matrix()))
    }

    /// Unitary produced by a pulse sequence.
    fn propagate(&self, sequence: &PyPulseSequence) -> Vec<Vec<Complex64>> {
        to_rows(ControlSystem::new(self.inner).propagate(&sequence.inner).matrix())
    }

    /// Unitary with exponentially rising fields of time constant `tau`.
    #[pyo3(signature = (sequence, tau, substeps=64))]
    fn propagate_with_rise_time(
        &self,
        py: Python<'_>,
        sequence: &PyPulseSequence,
        tau: f64,
        substeps: usize,
    ) -> PyResult<Vec<Vec<Complex64>>> {
        let system = ControlSystem::new(self.inner);
        let u = py
            .detach(|| system.propagate_with_rise_time(&sequence.inner, tau, substeps))
            .map_err(py_err)?;
        Ok(to_rows(u.matrix()))
    }

    /// Gate fidelity `|tr(U† U_target)| / d`.
    fn fidelity(&self, gate: &str, sequence: &PyPulseSequence) -> PyResult<f64> {
        Ok(self.fidelity_and_gradient(gate, sequence)?.0)
    }

    /// Fidelity and its exact gradient with respect to the amplitudes.
    fn fidelity_and_gradient(&self, gate: &str, sequence: &PyPulseSequence) -> PyResult<(f64, Vec<f64>)> {
        let target = build_target(&self.inner, parse(gate, "gate")?).map_err(py_err)?;
        fidelity_and_gradient(&ControlSystem::new(self.inner), &sequence.inner, &target).map_err(py_err)
    }

    /// Dimension of the dynamical Lie algebra for controls "x", "xy" or "xz".
    fn lie_dimension(&self, py: Python<'_>, controls: &str) -> PyResult<usize> {
        let scheme: ControlScheme = parse(controls, "control scheme")?;
        let report = py.detach(|| dynamical_algebra(&self.inner, scheme)).map_err(py_err)?;
        Ok(report.dimension)
    }

    /// Membership of `X` on the last spin and of the last-pair exchange in the
    /// x-only algebra, as a dict.
    fn x_reachability<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let record = py.detach(|| verify_x_reachability(&self.inner)).map_err(py_err)?;
        let json = serde_json::to_string(&record).map_err(|e| PyValueError::new_err(e.to_string()))?;
        py.import("json")?.call_method1("loads", (json,))
    }

    fn __repr__(&self) -> String {
        format!("SpinChainModel(ns={}, delta={})", self.inner.ns(), self.inner.delta())
    }
}

/// Piecewise-constant control sequence.
#[pyclass(name = "PulseSequence", frozen, from_py_object)]
#[derive(Clone)]
struct PyPulseSequence {
    inner: core::PulseSequence,
}

#[pymethods]
impl PyPulseSequence {
    #[new]
    fn new(scheme: &str, segment_duration: f64, amplitudes: Vec<f64>) -> PyResult<Self> {
        let scheme: ControlScheme = parse(scheme, "control scheme")?;
        Ok(Self {
            inner: core::PulseSequence::new(scheme, segment_duration, amplitudes).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme().to_string()
    }

    #[getter]
    fn segment_duration(&self) -> f64 {
        self.inner.segment_duration()
    }

    #[getter]
    fn axes(&self) -> Vec<String> {
        self.inner.axes().iter().map(|a| a.to_string()).collect()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<f64> {
        self.inner.amplitudes().to_vec()
    }

    #[getter]
    fn n_t(&self) -> usize {
        self.inner.n_t()
    }

    #[getter]
    fn total_time(&self) -> f64 {
        self.inner.total_time()
    }

    fn __len__(&self) -> usize {
        self.inner.n_t()
    }

    fn __repr__(&self) -> String {
        format!(
            "PulseSequence(scheme='{}', T={}, n_t={})",
            self.inner.scheme(),
            self.inner.segment_duration(),
            self.inner.n_t()
        )
    }
}

/// Outcome of a multi-start optimization.
#[pyclass(name = "OptimizationResult", frozen)]
struct PyOptimizationResult {
    file: SequenceFile,
    best_restart: usize,
}

#[pymethods]
impl PyOptimizationResult {
    #[getter]
    fn best_fidelity(&self) -> f64 {
        self.file.fidelity
    }

    #[getter]
    fn best_amplitudes(&self) -> Vec<f64> {
        self.file.sequence.amplitudes().to_vec()
    }

    #[getter]
    fn best_restart(&self) -> usize {
        self.best_restart
    }

    #[getter]
    fn per_restart_fidelities(&self) -> Vec<f64> {
        self.file.per_restart_fidelities.clone()
    }

    #[getter]
    fn iterations_used(&self) -> Vec<usize> {
        self.file.iterations_used.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.file.seed
    }

    #[getter]
    fn sequence(&self) -> PyPulseSequence {
        PyPulseSequence {
            inner: self.file.sequence.clone(),
        }
    }

    /// Same JSON document the command-line tool writes.
    fn to_json(&self) -> PyResult<String> {
        self.file.to_json_pretty().map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("OptimizationResult(best_fidelity={})", self.file.fidelity)
    }
}

/// Multi-start BFGS maximization of the gate fidelity.
#[pyfunction]
#[pyo3(signature = (model, gate, tf, nt, scheme="xy", restarts=20, seed=0, init_bound=20.0, max_iterations=500))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    model: &PySpinChainModel,
    gate: &str,
    tf: f64,
    nt: usize,
    scheme: &str,
    restarts: usize,
    seed: u64,
    init_bound: f64,
    max_iterations: usize,
) -> PyResult<PyOptimizationResult> {
    let gate: GateKind = parse(gate, "gate")?;
    let scheme: ControlScheme = parse(scheme, "control scheme")?;
    let target = build_target(&model.inner, gate).map_err(py_err)?;
    let mut config = OptimizationConfig::for_total_time(model.inner, target, scheme, nt, tf);
    config.restarts = restarts;
    config.rng_seed = seed;
    config.init_amplitude_bound = init_bound;
    config.max_iterations = max_iterations;
    let result = py.detach(|| core::optimize(&config)).map_err(py_err)?;
    Ok(PyOptimizationResult {
        file: SequenceFile::from_result(&model.inner, gate, &result),
        best_restart: result.best_restart,
    })
}

/// Mean, std and standard error of the fidelity under uniform amplitude noise.
///
/// Returns a list of `(delta_noise, mean, std, stderr, n)` tuples.
#[pyfunction]
#[pyo3(signature = (model, gate, sequence, delta_noise, samples=1000, seed=0))]
fn noise_statistics(
    py: Python<'_>,
    model: &PySpinChainModel,
    gate: &str,
    sequence: &PyPulseSequence,
    delta_noise: Vec<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<NoiseRow>> {
    let config = RobustnessConfig {
        model: model.inner,
        target: build_target(&model.inner, parse(gate, "gate")?).map_err(py_err)?,
        sequence: sequence.inner.clone(),
        delta_noise,
        samples,
        rng_seed: seed,
    };
    let stats = py.detach(|| noise_robustness(&config)).map_err(py_err)?;
    Ok(stats
        .iter()
        .map(|s| (s.delta_noise, s.mean, s.std, s.stderr, s.n))
        .collect())
}

/// Fidelity for each rise time, as `(tau, fidelity)` pairs.
#[pyfunction]
#[pyo3(signature = (model, gate, sequence, taus, substeps=64))]
fn rise_time(
    py: Python<'_>,
    model: &PySpinChainModel,
    gate: &str,
    sequence: &PyPulseSequence,
    taus: Vec<f64>,
    substeps: usize,
) -> PyResult<Vec<(f64, f64)>> {
    let target = build_target(&model.inner, parse(gate, "gate")?).map_err(py_err)?;
    let system = ControlSystem::new(model.inner);
    let points = py
        .detach(|| rise_time_sweep(&system, &sequence.inner, &target, &taus, substeps))
        .map_err(py_err)?;
    Ok(points.iter().map(|p| (p.tau, p.fidelity)).collect())
}

/// Ascending `t_f` scan for the first time whose best fidelity exceeds
/// `threshold`. Returns `(minimal_time or None, [(t_f, n_t, fidelity), ...])`.
#[pyfunction]
#[pyo3(signature = (gate, delta, start, stop, step, scheme="xy", ns=3, threshold=DEFAULT_FIDELITY_THRESHOLD,
                    t_max=DEFAULT_MAX_SEGMENT_DURATION, max_pulses=DEFAULT_MAX_PULSES, restarts=20, seed=0))]
#[allow(clippy::too_many_arguments)]
fn minimal_time(
    py: Python<'_>,
    gate: &str,
    delta: f64,
    start: f64,
    stop: f64,
    step: f64,
    scheme: &str,
    ns: usize,
    threshold: f64,
    t_max: f64,
    max_pulses: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<(Option<f64>, Vec<ScanRow>)> {
    let grid = TimeGrid::new(start, stop, step).map_err(py_err)?;
    let mut config = MinimalTimeScanConfig::new(parse(gate, "gate")?, parse(scheme, "control scheme")?, delta, grid);
    config.ns = ns;
    config.fidelity_threshold = threshold;
    config.policy = PulsePolicy {
        max_segment_duration: t_max,
        max_pulses,
    };
    config.optimizer.restarts = restarts;
    config.optimizer.rng_seed = seed;
    let outcome = py.detach(|| minimal_gate_time(&config)).map_err(py_err)?;
    let trace = outcome.trace.iter().map(|p| (p.t_f, p.n_t, p.fidelity)).collect();
    Ok((outcome.minimal_time, trace))
}

#[pymodule]
fn pyxxz(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpinChainModel>()?;
    m.add_class::<PyPulseSequence>()?;
    m.add_class::<PyOptimizationResult>()?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(noise_statistics, m)?)?;
    m.add_function(wrap_pyfunction!(rise_time, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_time, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
