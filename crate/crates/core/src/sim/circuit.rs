//! Circuit programs over [`GateOp`] and their differentiation.
//!
//! A [`CircuitSpec`] is validated once at construction; evaluation then
//! only needs cheap length checks. Gradients of cost functions of the form
//! `L = sum_k c_k * <Z_k>` are computed in adjoint mode: one forward pass,
//! then a single backward sweep that un-applies each gate, at total cost of
//! roughly three forward passes regardless of parameter count.

use num_complex::Complex64;

use super::{AngleSlot, GateOp, StateVector};
use crate::{Error, Result};

/// A fixed sequence of gates on `num_qubits` wires with angle slots bound
/// to inputs, trainable parameters, or constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    num_qubits: usize,
    gates: Vec<GateOp>,
    num_trainable: usize,
    num_input_slots: usize,
}

impl CircuitSpec {
    /// Validates wire ranges and slot indices. Trainable slots must cover
    /// `0..n` exactly once each — every parameter is used by exactly one
    /// gate, so parameter vectors and gradients line up with gate order.
    pub fn new(num_qubits: usize, gates: Vec<GateOp>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > super::MAX_QUBITS {
            return Err(Error::config(format!(
                "num_qubits must be in 1..={}, got {num_qubits}",
                super::MAX_QUBITS
            )));
        }
        let mut num_input_slots = 0usize;
        let mut trainable = Vec::new();
        for (i, gate) in gates.iter().enumerate() {
            let (w0, w1) = gate.wires();
            if w0 >= num_qubits || w1.is_some_and(|w| w >= num_qubits) {
                return Err(Error::config(format!(
                    "gate {i} ({gate:?}) addresses a wire outside 0..{num_qubits}"
                )));
            }
            if w1 == Some(w0) {
                return Err(Error::config(format!(
                    "gate {i} ({gate:?}) uses the same wire twice"
                )));
            }
            match gate.angle_slot() {
                Some(AngleSlot::Input(s)) => num_input_slots = num_input_slots.max(s + 1),
                Some(AngleSlot::Trainable(t)) => trainable.push(t),
                Some(AngleSlot::Fixed(_)) | None => {}
            }
        }
        let num_trainable = trainable.len();
        let mut seen = vec![false; num_trainable];
        for t in trainable {
            if t >= num_trainable || seen[t] {
                return Err(Error::config(format!(
                    "trainable slots must cover 0..{num_trainable} exactly once (slot {t} repeated or out of range)"
                )));
            }
            seen[t] = true;
        }
        Ok(CircuitSpec {
            num_qubits,
            gates,
            num_trainable,
            num_input_slots,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    /// Number of trainable angles the circuit expects.
    pub fn num_trainable(&self) -> usize {
        self.num_trainable
    }

    /// Minimum length of the input vector (highest input slot + 1).
    pub fn num_input_slots(&self) -> usize {
        self.num_input_slots
    }

    fn check_bindings(&self, inputs: &[f64], params: &[f64]) -> Result<()> {
        if inputs.len() < self.num_input_slots {
            return Err(Error::config(format!(
                "circuit reads input slots up to {}, but only {} inputs were given",
                self.num_input_slots,
                inputs.len()
            )));
        }
        if params.len() != self.num_trainable {
            return Err(Error::config(format!(
                "circuit has {} trainable angles, but {} parameters were given",
                self.num_trainable,
                params.len()
            )));
        }
        Ok(())
    }
}

#[inline]
fn resolve(slot: AngleSlot, inputs: &[f64], params: &[f64]) -> f64 {
    match slot {
        AngleSlot::Input(s) => inputs[s],
        AngleSlot::Trainable(t) => params[t],
        AngleSlot::Fixed(v) => v,
    }
}

#[inline]
fn gate_angle(gate: &GateOp, inputs: &[f64], params: &[f64]) -> f64 {
    gate.angle_slot()
        .map_or(0.0, |slot| resolve(slot, inputs, params))
}

/// Runs the circuit on `|0...0>` and returns (`<Z_k>` for every qubit,
/// final state).
pub fn run_circuit(
    circuit: &CircuitSpec,
    inputs: &[f64],
    params: &[f64],
) -> Result<(Vec<f64>, StateVector)> {
    circuit.check_bindings(inputs, params)?;
    let mut state = StateVector::zero(circuit.num_qubits)?;
    for gate in &circuit.gates {
        state.apply_gate(gate, gate_angle(gate, inputs, params));
    }
    Ok((state.z_expectations(), state))
}

/// Gradient of `L = sum_k cotangent[k] * <Z_k>` with respect to the
/// trainable parameters, via one forward pass and one adjoint sweep.
pub fn adjoint_vjp(
    circuit: &CircuitSpec,
    inputs: &[f64],
    params: &[f64],
    cotangent: &[f64],
) -> Result<Vec<f64>> {
    let (_, state) = run_circuit(circuit, inputs, params)?;
    adjoint_vjp_from_state(circuit, inputs, params, &state, cotangent)
}

/// Adjoint sweep starting from an already-computed final state (saves the
/// forward pass when the caller kept the state from [`run_circuit`]).
pub(crate) fn adjoint_vjp_from_state(
    circuit: &CircuitSpec,
    inputs: &[f64],
    params: &[f64],
    state: &StateVector,
    cotangent: &[f64],
) -> Result<Vec<f64>> {
    circuit.check_bindings(inputs, params)?;
    if cotangent.len() != circuit.num_qubits {
        return Err(Error::config(format!(
            "cotangent has {} entries for a {}-qubit circuit",
            cotangent.len(),
            circuit.num_qubits
        )));
    }
    let mut ket = state.clone();
    // bra = O|psi> for the diagonal observable O = sum_k c_k Z_k.
    let mut bra = ket.clone();
    for (basis, amp) in bra.amps.iter_mut().enumerate() {
        let mut diag = 0.0;
        for (k, c) in cotangent.iter().enumerate() {
            if basis >> k & 1 == 0 {
                diag += c;
            } else {
                diag -= c;
            }
        }
        *amp *= diag;
    }

    let mut grads = vec![0.0; circuit.num_trainable];
    for gate in circuit.gates.iter().rev() {
        // dL/dtheta = Im(<bra|P|ket>) with both vectors positioned just
        // after this gate, so measure first, then un-apply.
        if let Some(AngleSlot::Trainable(t)) = gate.angle_slot() {
            grads[t] = pauli_overlap_im(gate, &bra, &ket);
        }
        let angle = gate_angle(gate, inputs, params);
        ket.apply_inverse(gate, angle);
        bra.apply_inverse(gate, angle);
    }
    Ok(grads)
}

/// `Im(<bra| P |ket>)` where `P` is the Pauli generator of the rotation.
fn pauli_overlap_im(gate: &GateOp, bra: &StateVector, ket: &StateVector) -> f64 {
    let (wire, kind) = match *gate {
        GateOp::Rx { wire, .. } => (wire, Pauli::X),
        GateOp::Ry { wire, .. } => (wire, Pauli::Y),
        GateOp::Rz { wire, .. } => (wire, Pauli::Z),
        _ => unreachable!("only rotations carry trainable slots"),
    };
    let step = 1usize << wire;
    let mut acc = Complex64::ZERO;
    for (basis, b) in bra.amps.iter().enumerate() {
        let p_ket = match kind {
            // X|b> flips bit `wire`.
            Pauli::X => ket.amps[basis ^ step],
            // Y maps |0> -> i|1>, |1> -> -i|0> on the target bit.
            Pauli::Y => {
                let flipped = ket.amps[basis ^ step];
                if basis & step == 0 {
                    Complex64::new(flipped.im, -flipped.re) // -i * flipped
                } else {
                    Complex64::new(-flipped.im, flipped.re) // i * flipped
                }
            }
            Pauli::Z => {
                if basis & step == 0 {
                    ket.amps[basis]
                } else {
                    -ket.amps[basis]
                }
            }
        };
        acc += b.conj() * p_ket;
    }
    acc.im
}

enum Pauli {
    X,
    Y,
    Z,
}

impl StateVector {
    /// Applies the inverse of `gate`: negated angle for rotations; CZ and
    /// CNOT are self-inverse.
    fn apply_inverse(&mut self, gate: &GateOp, angle: f64) {
        match gate {
            GateOp::Rx { .. } | GateOp::Ry { .. } | GateOp::Rz { .. } => {
                self.apply_gate(gate, -angle)
            }
            GateOp::Cz { .. } | GateOp::Cnot { .. } => self.apply_gate(gate, 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rx(wire: usize, angle: AngleSlot) -> GateOp {
        GateOp::Rx { wire, angle }
    }

    #[test]
    fn construction_computes_slot_counts() {
        let spec = CircuitSpec::new(
            2,
            vec![
                rx(0, AngleSlot::Input(3)),
                GateOp::Ry { wire: 1, angle: AngleSlot::Trainable(1) },
                GateOp::Rz { wire: 0, angle: AngleSlot::Trainable(0) },
                GateOp::Cz { a: 0, b: 1 },
            ],
        )
        .unwrap();
        assert_eq!(spec.num_trainable(), 2);
        assert_eq!(spec.num_input_slots(), 4);
    }

    #[test]
    fn construction_rejects_bad_wires_and_slots() {
        assert!(CircuitSpec::new(2, vec![rx(2, AngleSlot::Fixed(0.0))]).is_err());
        assert!(CircuitSpec::new(2, vec![GateOp::Cz { a: 1, b: 1 }]).is_err());
        // Trainable slots 0 and 2 with nothing at 1: rejected.
        assert!(CircuitSpec::new(
            2,
            vec![rx(0, AngleSlot::Trainable(0)), rx(1, AngleSlot::Trainable(2))]
        )
        .is_err());
        // The same trainable slot twice: rejected.
        assert!(CircuitSpec::new(
            2,
            vec![rx(0, AngleSlot::Trainable(0)), rx(1, AngleSlot::Trainable(0))]
        )
        .is_err());
    }

    #[test]
    fn run_circuit_rejects_short_bindings() {
        let spec = CircuitSpec::new(
            1,
            vec![rx(0, AngleSlot::Input(0)), rx(0, AngleSlot::Trainable(0))],
        )
        .unwrap();
        assert!(run_circuit(&spec, &[], &[0.1]).is_err());
        assert!(run_circuit(&spec, &[0.5], &[]).is_err());
        assert!(run_circuit(&spec, &[0.5], &[0.1, 0.2]).is_err());
        assert!(run_circuit(&spec, &[0.5], &[0.1]).is_ok());
    }

    #[test]
    fn single_rx_matches_cosine_closed_form() {
        let spec = CircuitSpec::new(1, vec![rx(0, AngleSlot::Trainable(0))]).unwrap();
        for &theta in &[0.0, 0.4, PI / 2.0, 2.9] {
            let (z, _) = run_circuit(&spec, &[], &[theta]).unwrap();
            assert!((z[0] - theta.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_gradient_of_single_rx_is_minus_sine() {
        // L = <Z> = cos(theta), so dL/dtheta = -sin(theta). At pi/2 the
        // gradient is exactly -1.
        let spec = CircuitSpec::new(1, vec![rx(0, AngleSlot::Trainable(0))]).unwrap();
        for &theta in &[0.0, 0.4, PI / 2.0, 2.9, -1.3] {
            let g = adjoint_vjp(&spec, &[], &[theta], &[1.0]).unwrap();
            assert!((g[0] + theta.sin()).abs() < 1e-12, "theta={theta}");
        }
    }

    #[test]
    fn adjoint_scales_linearly_with_cotangent() {
        let spec = CircuitSpec::new(
            2,
            vec![
                rx(0, AngleSlot::Trainable(0)),
                GateOp::Ry { wire: 1, angle: AngleSlot::Trainable(1) },
                GateOp::Cz { a: 0, b: 1 },
            ],
        )
        .unwrap();
        let params = [0.7, -0.2];
        let g1 = adjoint_vjp(&spec, &[], &params, &[1.0, 0.5]).unwrap();
        let g2 = adjoint_vjp(&spec, &[], &params, &[2.0, 1.0]).unwrap();
        for (a, b) in g1.iter().zip(&g2) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_rejects_wrong_cotangent_length() {
        let spec = CircuitSpec::new(2, vec![rx(0, AngleSlot::Trainable(0))]).unwrap();
        assert!(adjoint_vjp(&spec, &[], &[0.1], &[1.0]).is_err());
        assert!(adjoint_vjp(&spec, &[], &[0.1], &[1.0, 0.0]).is_ok());
    }

    #[test]
    fn fixed_and_input_slots_do_not_produce_gradients() {
        let spec = CircuitSpec::new(
            1,
            vec![
                rx(0, AngleSlot::Input(0)),
                rx(0, AngleSlot::Fixed(0.3)),
                rx(0, AngleSlot::Trainable(0)),
            ],
        )
        .unwrap();
        // All three rotations share a wire, so they compose: <Z> =
        // cos(x + 0.3 + theta) and dL/dtheta = -sin(x + 0.3 + theta).
        let (x, theta) = (0.9, -0.4);
        let g = adjoint_vjp(&spec, &[x], &[theta], &[1.0]).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] + (x + 0.3 + theta).sin()).abs() < 1e-12);
    }
}
