//! Actor-critic agents over CartPole observations.
//!
//! Three interchangeable architectures share one flat parameter vector and
//! analytic gradients:
//!
//! - [`AgentKind::HybridPqc`] — normalize the observation to angles, run
//!   one parameterized circuit per head (actor and critic own independent
//!   angle sets over the same layout), read all single-qubit Z
//!   expectations, replicate them via output reuse, and apply a linear
//!   head. Circuit gradients flow through the adjoint sweep.
//! - [`AgentKind::ClassicalOrControl`] — the same normalize/replicate/
//!   linear-head pipeline with the circuit removed; isolates how much work
//!   output reuse alone does.
//! - [`AgentKind::ClassicalMlp`] — a plain tanh MLP on the raw
//!   observation, the classical baseline.

pub mod math;

pub use math::{clip_grad_norm, softmax, AdamState, Categorical};

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{adjoint_vjp_from_state, run_circuit, CircuitSpec, StateVector};
use crate::templates::{build_template, normalize_observation, TemplateConfig};
use crate::{Error, Result};

/// CartPole observation width.
pub const NUM_FEATURES: usize = 4;
/// CartPole action count.
pub const NUM_ACTIONS: usize = 2;

/// Output-reuse factors the experiments accept.
pub const ALLOWED_REUSE: [usize; 5] = [1, 4, 8, 16, 32];

/// Replicates `values` end to end `r` times: `[v, v, ..., v]`. Widening a
/// linear head this way changes its gradient geometry without adding any
/// information.
pub fn output_reuse(values: &[f64], r: usize) -> Result<Vec<f64>> {
    if r < 1 {
        return Err(Error::config(format!("output reuse factor must be >= 1, got {r}")));
    }
    let mut out = Vec::with_capacity(values.len() * r);
    for _ in 0..r {
        out.extend_from_slice(values);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentKind {
    /// Quantum trunk with output reuse and linear heads.
    HybridPqc {
        template: TemplateConfig,
        #[serde(default = "default_reuse")]
        output_reuse: usize,
    },
    /// Classical control: normalized features, output reuse, linear heads.
    ClassicalOrControl {
        #[serde(default = "default_reuse")]
        output_reuse: usize,
        /// Keep only the first `k` normalized features before replication,
        /// matching a `k`-qubit trunk's width. `None` keeps all four.
        #[serde(default)]
        truncate_features: Option<usize>,
    },
    /// Tanh MLP on the raw observation.
    ClassicalMlp {
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
    },
}

fn default_reuse() -> usize {
    1
}

fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

/// One dense layer's slice of the flat parameter vector. Weights are
/// row-major `out_dim x in_dim`, followed by `out_dim` biases.
#[derive(Debug, Clone)]
struct LinearLayer {
    w: usize,
    b: usize,
    in_dim: usize,
    out_dim: usize,
}

impl LinearLayer {
    fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        let mut y = Vec::with_capacity(self.out_dim);
        for o in 0..self.out_dim {
            let row = &params[self.w + o * self.in_dim..self.w + (o + 1) * self.in_dim];
            let mut acc = params[self.b + o];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            y.push(acc);
        }
        y
    }

    /// Accumulates weight/bias gradients for upstream cotangent `d_out`
    /// and returns the cotangent on the input.
    fn backward(&self, params: &[f64], x: &[f64], d_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let mut d_x = vec![0.0; self.in_dim];
        for o in 0..self.out_dim {
            let g = d_out[o];
            grads[self.b + o] += g;
            let row_at = self.w + o * self.in_dim;
            for i in 0..self.in_dim {
                grads[row_at + i] += g * x[i];
                d_x[i] += params[row_at + i] * g;
            }
        }
        d_x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Actor,
    Critic,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    side: Side,
    /// `activations[i]` is the input of dense layer `i`.
    activations: Vec<Vec<f64>>,
    /// Angles fed to the circuit (hybrid only).
    circuit_inputs: Option<[f64; 4]>,
    /// Final statevector, reused to skip the adjoint's forward pass.
    final_state: Option<StateVector>,
}

/// A fixed agent architecture: parameter layout plus forward/backward.
/// Parameters themselves live in a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Agent {
    kind: AgentKind,
    circuit: Option<CircuitSpec>,
    actor_angles: Range<usize>,
    critic_angles: Range<usize>,
    actor_layers: Vec<LinearLayer>,
    critic_layers: Vec<LinearLayer>,
    num_params: usize,
}

impl Agent {
    pub fn new(kind: AgentKind) -> Result<Self> {
        let (circuit, trunk_dim) = match &kind {
            AgentKind::HybridPqc { template, output_reuse } => {
                check_reuse(*output_reuse)?;
                let circuit = build_template(template)?;
                let dim = template.num_qubits * output_reuse;
                (Some(circuit), dim)
            }
            AgentKind::ClassicalOrControl { output_reuse, truncate_features } => {
                check_reuse(*output_reuse)?;
                let kept = truncate_features.unwrap_or(NUM_FEATURES);
                if kept == 0 || kept > NUM_FEATURES {
                    return Err(Error::config(format!(
                        "truncate_features must be in 1..={NUM_FEATURES}, got {kept}"
                    )));
                }
                (None, kept * output_reuse)
            }
            AgentKind::ClassicalMlp { hidden } => {
                if hidden.is_empty() {
                    return Err(Error::config("MLP needs at least one hidden layer"));
                }
                if hidden.iter().any(|h| *h == 0) {
                    return Err(Error::config("MLP hidden widths must be positive"));
                }
                (None, NUM_FEATURES)
            }
        };

        let num_angles = circuit.as_ref().map_or(0, |c| c.num_trainable());
        let actor_angles = 0..num_angles;
        let critic_angles = num_angles..2 * num_angles;
        let mut next = 2 * num_angles;

        let mut dims = vec![trunk_dim];
        if let AgentKind::ClassicalMlp { hidden } = &kind {
            dims.extend_from_slice(hidden);
        }
        let layer_stack = |head_dim: usize, next: &mut usize| {
            let mut layers = Vec::new();
            let mut widths = dims.clone();
            widths.push(head_dim);
            for pair in widths.windows(2) {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                layers.push(LinearLayer { w: *next, b: *next + in_dim * out_dim, in_dim, out_dim });
                *next += in_dim * out_dim + out_dim;
            }
            layers
        };
        let actor_layers = layer_stack(NUM_ACTIONS, &mut next);
        let critic_layers = layer_stack(1, &mut next);

        Ok(Agent {
            kind,
            circuit,
            actor_angles,
            critic_angles,
            actor_layers,
            critic_layers,
            num_params: next,
        })
    }

    pub fn kind(&self) -> &AgentKind {
        &self.kind
    }

    pub fn circuit(&self) -> Option<&CircuitSpec> {
        self.circuit.as_ref()
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Trainable circuit angles of the actor trunk (empty if classical).
    pub fn actor_angle_range(&self) -> Range<usize> {
        self.actor_angles.clone()
    }

    pub fn critic_angle_range(&self) -> Range<usize> {
        self.critic_angles.clone()
    }

    /// Draws a fresh parameter vector: circuit angles uniform in
    /// `[-pi, pi)`; dense layers orthogonal with gain sqrt(2) for hidden
    /// layers, 0.01 for the policy head, 1.0 for the value head; zero
    /// biases. Actor and critic are drawn independently, in layout order.
    pub fn init_params(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut params = vec![0.0; self.num_params];
        for i in self.actor_angles.clone().chain(self.critic_angles.clone()) {
            params[i] = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        }
        for (layers, head_gain) in [(&self.actor_layers, 0.01), (&self.critic_layers, 1.0)] {
            for (i, layer) in layers.iter().enumerate() {
                let gain = if i + 1 == layers.len() { head_gain } else { 2.0_f64.sqrt() };
                let w = math::orthogonal_matrix(layer.out_dim, layer.in_dim, gain, rng);
                params[layer.w..layer.w + w.len()].copy_from_slice(&w);
                // Biases stay zero.
            }
        }
        params
    }

    /// Width of the input to the first dense layer.
    pub fn head_input_dim(&self) -> usize {
        self.actor_layers[0].in_dim
    }

    fn trunk_forward(
        &self,
        params: &[f64],
        obs: &[f64; 4],
        side: Side,
    ) -> Result<(Vec<f64>, Option<[f64; 4]>, Option<StateVector>)> {
        match &self.kind {
            AgentKind::HybridPqc { output_reuse: r, .. } => {
                let angles = normalize_observation(obs);
                let range = match side {
                    Side::Actor => self.actor_angles.clone(),
                    Side::Critic => self.critic_angles.clone(),
                };
                let circuit = self.circuit.as_ref().expect("hybrid agent has a circuit");
                let (z, state) = run_circuit(circuit, &angles, &params[range])?;
                let h = output_reuse(&z, *r)?;
                Ok((h, Some(angles), Some(state)))
            }
            AgentKind::ClassicalOrControl { output_reuse: r, truncate_features } => {
                let angles = normalize_observation(obs);
                let kept = truncate_features.unwrap_or(NUM_FEATURES);
                let h = output_reuse(&angles[..kept], *r)?;
                Ok((h, None, None))
            }
            AgentKind::ClassicalMlp { .. } => Ok((obs.to_vec(), None, None)),
        }
    }

    fn stack_forward(
        &self,
        params: &[f64],
        layers: &[LinearLayer],
        trunk: Vec<f64>,
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut activations = vec![trunk];
        for (i, layer) in layers.iter().enumerate() {
            let mut y = layer.forward(params, activations.last().unwrap());
            if i + 1 < layers.len() {
                for v in &mut y {
                    *v = v.tanh();
                }
                activations.push(y);
            } else {
                return (y, activations);
            }
        }
        unreachable!("every stack has at least one layer")
    }

    fn forward(&self, params: &[f64], obs: &[f64; 4], side: Side) -> Result<(Vec<f64>, ForwardCache)> {
        assert_eq!(params.len(), self.num_params, "parameter vector has the wrong length");
        let (trunk, circuit_inputs, final_state) = self.trunk_forward(params, obs, side)?;
        let layers = match side {
            Side::Actor => &self.actor_layers,
            Side::Critic => &self.critic_layers,
        };
        let (out, activations) = self.stack_forward(params, layers, trunk);
        Ok((
            out,
            ForwardCache { side, activations, circuit_inputs, final_state },
        ))
    }

    /// Action logits (length 2) plus the cache for [`Agent::actor_backward`].
    pub fn actor_forward(&self, params: &[f64], obs: &[f64; 4]) -> Result<(Vec<f64>, ForwardCache)> {
        self.forward(params, obs, Side::Actor)
    }

    /// State value plus the cache for [`Agent::critic_backward`].
    pub fn critic_forward(&self, params: &[f64], obs: &[f64; 4]) -> Result<(f64, ForwardCache)> {
        let (out, cache) = self.forward(params, obs, Side::Critic)?;
        Ok((out[0], cache))
    }

    fn backward(
        &self,
        params: &[f64],
        cache: &ForwardCache,
        d_out: &[f64],
        grads: &mut [f64],
    ) -> Result<()> {
        assert_eq!(params.len(), self.num_params);
        assert_eq!(grads.len(), self.num_params);
        let layers = match cache.side {
            Side::Actor => &self.actor_layers,
            Side::Critic => &self.critic_layers,
        };
        let mut d = d_out.to_vec();
        for (i, layer) in layers.iter().enumerate().rev() {
            d = layer.backward(params, &cache.activations[i], &d, grads);
            if i > 0 {
                // The input of layer i is tanh of layer i-1's
                // pre-activation: d/dz tanh = 1 - tanh^2.
                for (dv, a) in d.iter_mut().zip(&cache.activations[i]) {
                    *dv *= 1.0 - a * a;
                }
            }
        }
        if let AgentKind::HybridPqc { .. } = &self.kind {
            let circuit = self.circuit.as_ref().expect("hybrid agent has a circuit");
            let q = circuit.num_qubits();
            // Sum the cotangent over the replicas back onto the Z values.
            let mut dz = vec![0.0; q];
            for (i, dv) in d.iter().enumerate() {
                dz[i % q] += dv;
            }
            let inputs = cache.circuit_inputs.expect("hybrid cache carries circuit inputs");
            let state = cache.final_state.as_ref().expect("hybrid cache carries the state");
            let range = match cache.side {
                Side::Actor => self.actor_angles.clone(),
                Side::Critic => self.critic_angles.clone(),
            };
            let angle_grads =
                adjoint_vjp_from_state(circuit, &inputs, &params[range.clone()], state, &dz)?;
            for (g, slot) in angle_grads.into_iter().zip(range) {
                grads[slot] += g;
            }
        }
        Ok(())
    }

    /// Accumulates `d(dot(d_logits, logits))/d(params)` into `grads`.
    pub fn actor_backward(
        &self,
        params: &[f64],
        cache: &ForwardCache,
        d_logits: &[f64],
        grads: &mut [f64],
    ) -> Result<()> {
        assert_eq!(cache.side, Side::Actor, "actor_backward needs an actor cache");
        assert_eq!(d_logits.len(), NUM_ACTIONS);
        self.backward(params, cache, d_logits, grads)
    }

    /// Accumulates `d(d_value * value)/d(params)` into `grads`.
    pub fn critic_backward(
        &self,
        params: &[f64],
        cache: &ForwardCache,
        d_value: f64,
        grads: &mut [f64],
    ) -> Result<()> {
        assert_eq!(cache.side, Side::Critic, "critic_backward needs a critic cache");
        self.backward(params, cache, &[d_value], grads)
    }
}

fn check_reuse(r: usize) -> Result<()> {
    if ALLOWED_REUSE.contains(&r) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "output reuse factor must be one of {ALLOWED_REUSE:?}, got {r}"
        )))
    }
}

/// Flat parameter vector plus its Adam moments.
#[derive(Debug, Clone)]
pub struct ParamStore {
    values: Vec<f64>,
    adam: AdamState,
}

impl ParamStore {
    pub fn init(agent: &Agent, rng: &mut impl Rng) -> Self {
        let values = agent.init_params(rng);
        let adam = AdamState::new(values.len());
        ParamStore { values, adam }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        let adam = AdamState::new(values.len());
        ParamStore { values, adam }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Clips `grads` to `max_grad_norm` (global L2) and applies one Adam
    /// step at `lr`. Returns the pre-clip gradient norm.
    pub fn apply_update(&mut self, grads: &mut [f64], lr: f64, max_grad_norm: f64) -> f64 {
        let norm = clip_grad_norm(grads, max_grad_norm);
        self.adam.step(&mut self.values, grads, lr);
        norm
    }
}
