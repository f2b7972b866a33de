//! Python bindings (`pyqrl`) for the core laboratory: circuit templates
//! with exact forward/gradient evaluation, the CartPole dynamics, the
//! observation normalizer, output reuse, and full PPO training runs.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qrl_core::agent::{self, AgentKind};
use qrl_core::cartpole;
use qrl_core::ppo::{self, PpoConfig};
use qrl_core::sim::{adjoint_vjp, run_circuit, CircuitSpec, MAX_QUBITS};
use qrl_core::templates::{build_template, TemplateConfig, TemplateFamily};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_family(name: &str) -> PyResult<TemplateFamily> {
    match name {
        "skolik_a" => Ok(TemplateFamily::SkolikA),
        "uqc_b" => Ok(TemplateFamily::UqcB),
        other => Err(value_err(format!(
            "unknown template family {other:?}; expected \"skolik_a\" or \"uqc_b\""
        ))),
    }
}

/// A statevector circuit built from one of the two ansatz/embedding
/// templates, evaluated exactly on `|0..0>`.
#[pyclass(module = "pyqrl")]
struct Circuit {
    spec: CircuitSpec,
}

#[pymethods]
impl Circuit {
    /// Builds a template circuit. `family` is `"skolik_a"` or `"uqc_b"`;
    /// `num_layers` is the data re-uploading depth; `entangled` toggles
    /// the family's entangling ring.
    #[new]
    #[pyo3(signature = (family, num_qubits, num_layers=1, entangled=false, num_features=4))]
    fn new(
        family: &str,
        num_qubits: usize,
        num_layers: usize,
        entangled: bool,
        num_features: usize,
    ) -> PyResult<Self> {
        let config = TemplateConfig {
            family: parse_family(family)?,
            num_qubits,
            num_layers,
            entangled,
            num_features,
        };
        let spec = build_template(&config).map_err(value_err)?;
        Ok(Circuit { spec })
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.spec.num_qubits()
    }

    /// Number of trainable rotation angles.
    #[getter]
    fn num_trainable(&self) -> usize {
        self.spec.num_trainable()
    }

    /// Number of input feature slots read by embedding gates.
    #[getter]
    fn num_inputs(&self) -> usize {
        self.spec.num_input_slots()
    }

    /// Total gate count.
    #[getter]
    fn num_gates(&self) -> usize {
        self.spec.gates().len()
    }

    /// `<Z_k>` for every qubit after running on `|0..0>`.
    fn expectations(&self, inputs: Vec<f64>, params: Vec<f64>) -> PyResult<Vec<f64>> {
        let (z, _) = run_circuit(&self.spec, &inputs, &params).map_err(value_err)?;
        Ok(z)
    }

    /// Final statevector amplitudes in little-endian basis order (bit `k`
    /// of the index is qubit `k`).
    fn amplitudes(&self, inputs: Vec<f64>, params: Vec<f64>) -> PyResult<Vec<Complex64>> {
        let (_, state) = run_circuit(&self.spec, &inputs, &params).map_err(value_err)?;
        Ok(state.amplitudes().to_vec())
    }

    /// Gradient of `sum_k cotangent[k] * <Z_k>` with respect to the
    /// trainable parameters, computed by the adjoint method.
    fn gradient(
        &self,
        inputs: Vec<f64>,
        params: Vec<f64>,
        cotangent: Vec<f64>,
    ) -> PyResult<Vec<f64>> {
        adjoint_vjp(&self.spec, &inputs, &params, &cotangent).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(qubits={}, gates={}, trainable={})",
            self.spec.num_qubits(),
            self.spec.gates().len(),
            self.spec.num_trainable()
        )
    }
}

/// The classic cart-pole balancing environment (explicit-Euler dynamics,
/// 500-step cap, +1 reward per step).
#[pyclass(module = "pyqrl")]
struct CartPole {
    env: cartpole::CartPole,
    rng: ChaCha8Rng,
    finished: bool,
}

#[pymethods]
impl CartPole {
    #[new]
    #[pyo3(signature = (seed=0))]
    fn new(seed: u64) -> Self {
        CartPole {
            env: cartpole::CartPole::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            finished: true,
        }
    }

    /// Starts a new episode from the usual uniform initial distribution
    /// and returns the observation.
    fn reset(&mut self) -> Vec<f64> {
        self.finished = false;
        self.env.reset(&mut self.rng).to_vec()
    }

    /// Starts a new episode from an explicit state (for scripted traces).
    fn reset_to(&mut self, state: [f64; 4]) -> Vec<f64> {
        self.finished = false;
        self.env.reset_to(state).to_vec()
    }

    /// Applies `action` (0 = push left, 1 = push right) and returns
    /// `(observation, reward, terminated, truncated)`.
    fn step(&mut self, action: usize) -> PyResult<(Vec<f64>, f64, bool, bool)> {
        if self.finished {
            return Err(value_err("episode is finished; call reset() first"));
        }
        if action > 1 {
            return Err(value_err(format!("action must be 0 or 1, got {action}")));
        }
        let out = self.env.step(action);
        self.finished = out.done();
        Ok((
            out.observation.to_vec(),
            out.reward,
            out.terminated,
            out.truncated,
        ))
    }

    #[getter]
    fn observation(&self) -> Vec<f64> {
        self.env.observation().to_vec()
    }

    #[getter]
    fn elapsed_steps(&self) -> u32 {
        self.env.elapsed_steps()
    }
}

/// Maps a raw CartPole observation to the four embedding angles:
/// clamped-scaled positions and arctan-squashed velocities.
#[pyfunction]
fn normalize_observation(obs: [f64; 4]) -> Vec<f64> {
    qrl_core::templates::normalize_observation(&obs).to_vec()
}

/// Concatenates `r` copies of `values` (output reuse).
#[pyfunction]
fn output_reuse(values: Vec<f64>, r: usize) -> PyResult<Vec<f64>> {
    agent::output_reuse(&values, r).map_err(value_err)
}

/// Trains an agent with PPO on CartPole for one seed and returns the
/// learning curve as `(global_step, episodic_return)` pairs.
///
/// `agent` is a JSON object like
/// `{"kind": "classical_mlp", "hidden": [64, 64]}` or
/// `{"kind": "hybrid_pqc", "output_reuse": 4, "template": {...}}`;
/// `ppo` optionally overrides trainer fields, e.g.
/// `{"total_steps": 10000}`.
#[pyfunction]
#[pyo3(signature = (agent, seed=0, ppo=None))]
fn train(agent: &str, seed: u64, ppo: Option<&str>) -> PyResult<Vec<(u64, f64)>> {
    let kind: AgentKind = serde_json::from_str(agent).map_err(value_err)?;
    let config: PpoConfig = match ppo {
        Some(text) => serde_json::from_str(text).map_err(value_err)?,
        None => PpoConfig::default(),
    };
    let curve = ppo::train(&kind, &config, seed).map_err(value_err)?;
    if let Some(diag) = curve.aborted {
        return Err(value_err(format!("training diverged: {diag}")));
    }
    Ok(curve
        .points
        .into_iter()
        .map(|p| (p.step, p.episodic_return))
        .collect())
}

/// Rust-backed laboratory for quantum and classical RL agents: exact
/// statevector circuits with adjoint gradients, CartPole, and PPO.
#[pymodule]
fn pyqrl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Circuit>()?;
    m.add_class::<CartPole>()?;
    m.add_function(wrap_pyfunction!(normalize_observation, m)?)?;
    m.add_function(wrap_pyfunction!(output_reuse, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add("MAX_QUBITS", MAX_QUBITS)?;
    Ok(())
}
