//! Circuit templates mapping observations and trainable angles onto gates.
//!
//! Two families are provided, differing in how classical data enters the
//! register and which entangler closes each layer:
//!
//! - [`TemplateFamily::SkolikA`] — one datum per qubit: each layer embeds
//!   feature `q mod F` with an RX on qubit `q`, applies a trainable RY/RZ
//!   pair per qubit, and (optionally) a CZ ring. Requires the qubit count
//!   to be a multiple of the feature count so every feature appears the
//!   same number of times.
//! - [`TemplateFamily::UqcB`] — three data per qubit: features are packed
//!   into chunks of three; each layer embeds every chunk on every qubit as
//!   an RZ/RY/RZ triple followed by a trainable RZ/RY/RZ triple, with
//!   (optionally) a CNOT ring between successive chunk blocks. Missing
//!   entries in the last chunk are padded with fixed zero angles.
//!
//! Both families repeat their layer block `L` times (data re-uploading for
//! `L > 1`) and share one observation-to-angle normalization.

use serde::{Deserialize, Serialize};

use crate::cartpole::{THETA_THRESHOLD, X_THRESHOLD};
use crate::sim::{AngleSlot, CircuitSpec, GateOp};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateFamily {
    /// Single-angle RX embedding with CZ ring entangler.
    SkolikA,
    /// Three-angle RZ/RY/RZ embedding with CNOT ring entangler.
    UqcB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateConfig {
    pub family: TemplateFamily,
    pub num_qubits: usize,
    /// Number of layer repetitions (data re-uploading depth), at least 1.
    pub num_layers: usize,
    /// Whether the family's entangling ring is present (closing each layer
    /// for the single-angle family; between chunk blocks for the
    /// three-angle family).
    pub entangled: bool,
    pub num_features: usize,
}

impl TemplateConfig {
    /// Convenience constructor for the 4-feature CartPole observation.
    pub fn cartpole(
        family: TemplateFamily,
        num_qubits: usize,
        num_layers: usize,
        entangled: bool,
    ) -> Self {
        TemplateConfig {
            family,
            num_qubits,
            num_layers,
            entangled,
            num_features: 4,
        }
    }
}

/// Nearest-neighbour ring `(0,1), (1,2), ..., (Q-1,0)`, degenerating to a
/// single edge for two qubits (the wrap-around pair would repeat it) and to
/// nothing for one.
fn ring_edges(num_qubits: usize) -> Vec<(usize, usize)> {
    match num_qubits {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        q => (0..q).map(|i| (i, (i + 1) % q)).collect(),
    }
}

/// Builds the gate sequence for `config`. The construction is a pure
/// function of the config: building twice yields identical specs.
pub fn build_template(config: &TemplateConfig) -> Result<CircuitSpec> {
    if config.num_layers == 0 {
        return Err(Error::config("num_layers must be at least 1"));
    }
    if config.num_features == 0 {
        return Err(Error::config("num_features must be at least 1"));
    }
    let gates = match config.family {
        TemplateFamily::SkolikA => build_skolik_a(config)?,
        TemplateFamily::UqcB => build_uqc_b(config),
    };
    CircuitSpec::new(config.num_qubits, gates)
}

fn build_skolik_a(config: &TemplateConfig) -> Result<Vec<GateOp>> {
    let (q, f) = (config.num_qubits, config.num_features);
    if q == 0 || q % f != 0 {
        return Err(Error::config(format!(
            "single-angle embedding needs num_qubits to be a positive multiple of num_features, got {q} qubits for {f} features"
        )));
    }
    let mut gates = Vec::new();
    let mut next = 0;
    for _ in 0..config.num_layers {
        for wire in 0..q {
            gates.push(GateOp::Rx { wire, angle: AngleSlot::Input(wire % f) });
        }
        for wire in 0..q {
            gates.push(GateOp::Ry { wire, angle: AngleSlot::Trainable(next) });
            gates.push(GateOp::Rz { wire, angle: AngleSlot::Trainable(next + 1) });
            next += 2;
        }
        if config.entangled {
            for (a, b) in ring_edges(q) {
                gates.push(GateOp::Cz { a, b });
            }
        }
    }
    Ok(gates)
}

fn build_uqc_b(config: &TemplateConfig) -> Vec<GateOp> {
    let (q, f) = (config.num_qubits, config.num_features);
    let chunks = f.div_ceil(3);
    // Feature index -> slot, padding past-the-end entries with zero angles.
    let slot = |idx: usize| {
        if idx < f {
            AngleSlot::Input(idx)
        } else {
            AngleSlot::Fixed(0.0)
        }
    };
    let mut gates = Vec::new();
    let mut next = 0;
    let mut first_block = true;
    for _ in 0..config.num_layers {
        for c in 0..chunks {
            // Rings sit between successive chunk blocks (never before the
            // first or after the last), so every embedding past the opening
            // chunk acts on an already-entangled register.
            if config.entangled && !first_block {
                for (control, target) in ring_edges(q) {
                    gates.push(GateOp::Cnot { control, target });
                }
            }
            first_block = false;
            for wire in 0..q {
                gates.push(GateOp::Rz { wire, angle: slot(3 * c) });
                gates.push(GateOp::Ry { wire, angle: slot(3 * c + 1) });
                gates.push(GateOp::Rz { wire, angle: slot(3 * c + 2) });
                gates.push(GateOp::Rz { wire, angle: AngleSlot::Trainable(next) });
                gates.push(GateOp::Ry { wire, angle: AngleSlot::Trainable(next + 1) });
                gates.push(GateOp::Rz { wire, angle: AngleSlot::Trainable(next + 2) });
                next += 3;
            }
        }
    }
    gates
}

/// Maps a raw CartPole observation `[x, x_dot, theta, theta_dot]` to
/// rotation angles in `[-pi, pi]`.
///
/// The two bounded components are scaled by their termination thresholds
/// (clamping the slight overshoot a terminal observation can carry) and
/// stretched to `[-pi, pi]`; the two unbounded velocities are squashed with
/// `arctan`. Panics on non-finite input — upstream physics bugs must not
/// leak into training silently.
pub fn normalize_observation(obs: &[f64; 4]) -> [f64; 4] {
    assert!(
        obs.iter().all(|v| v.is_finite()),
        "non-finite observation: {obs:?}"
    );
    let bounded = |v: f64, limit: f64| (v / limit).clamp(-1.0, 1.0) * std::f64::consts::PI;
    [
        bounded(obs[0], X_THRESHOLD),
        obs[1].atan(),
        bounded(obs[2], THETA_THRESHOLD),
        obs[3].atan(),
    ]
}
