//! Dense statevector simulation.
//!
//! Amplitudes are stored in a flat `Vec<Complex64>` indexed by basis state,
//! with qubit `k` mapped to bit `k` of the index (qubit 0 is the least
//! significant bit). Gates are applied in place over strided amplitude
//! pairs; no gate matrix is ever materialized on this path.

mod circuit;

pub use circuit::{adjoint_vjp, run_circuit, CircuitSpec};
pub(crate) use circuit::adjoint_vjp_from_state;

use num_complex::Complex64;

use crate::{Error, Result};

/// Largest supported register; the dense representation needs `2^n`
/// amplitudes, so this caps memory at 64 KiB per state.
pub const MAX_QUBITS: usize = 12;

/// Where a rotation gate reads its angle from at evaluation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSlot {
    /// Index into the per-call input (feature) vector.
    Input(usize),
    /// Index into the trainable parameter vector.
    Trainable(usize),
    /// A constant angle baked into the circuit (used for padding).
    Fixed(f64),
}

/// One gate in a circuit. Rotations follow the convention
/// `R_P(theta) = exp(-i * theta * P / 2)` for Pauli `P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    Rx { wire: usize, angle: AngleSlot },
    Ry { wire: usize, angle: AngleSlot },
    Rz { wire: usize, angle: AngleSlot },
    /// Controlled-Z; symmetric in its two wires.
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    /// The angle slot for rotation gates, `None` for entangling gates.
    pub fn angle_slot(&self) -> Option<AngleSlot> {
        match *self {
            GateOp::Rx { angle, .. } | GateOp::Ry { angle, .. } | GateOp::Rz { angle, .. } => {
                Some(angle)
            }
            GateOp::Cz { .. } | GateOp::Cnot { .. } => None,
        }
    }

    /// Wires the gate acts on.
    pub fn wires(&self) -> (usize, Option<usize>) {
        match *self {
            GateOp::Rx { wire, .. } | GateOp::Ry { wire, .. } | GateOp::Rz { wire, .. } => {
                (wire, None)
            }
            GateOp::Cz { a, b } => (a, Some(b)),
            GateOp::Cnot { control, target } => (control, Some(target)),
        }
    }
}

/// A normalized pure state of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state `|0...0>`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::config(format!(
                "num_qubits must be in 1..={MAX_QUBITS}, got {num_qubits}"
            )));
        }
        let mut amps = vec![Complex64::ZERO; 1 << num_qubits];
        amps[0] = Complex64::ONE;
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Squared 2-norm; exactly 1 up to rounding for any valid state.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `gate` in place. For rotation gates the angle is taken from
    /// `angle` (the slot in the gate is ignored here; resolution happens in
    /// [`run_circuit`]). Panics if a wire is out of range or an entangling
    /// gate addresses the same wire twice: those are construction bugs, not
    /// runtime conditions.
    pub fn apply_gate(&mut self, gate: &GateOp, angle: f64) {
        match *gate {
            GateOp::Rx { wire, .. } => self.apply_rx(wire, angle),
            GateOp::Ry { wire, .. } => self.apply_ry(wire, angle),
            GateOp::Rz { wire, .. } => self.apply_rz(wire, angle),
            GateOp::Cz { a, b } => self.apply_cz(a, b),
            GateOp::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// `<Z_k>` for every qubit `k`: the probability-weighted parity of bit
    /// `k` over all basis states.
    pub fn z_expectations(&self) -> Vec<f64> {
        let mut values = vec![0.0; self.num_qubits];
        for (basis, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            for (k, v) in values.iter_mut().enumerate() {
                if basis >> k & 1 == 0 {
                    *v += p;
                } else {
                    *v -= p;
                }
            }
        }
        values
    }

    fn check_wire(&self, wire: usize) {
        assert!(
            wire < self.num_qubits,
            "wire {wire} out of range for {} qubits",
            self.num_qubits
        );
    }

    /// Visits every amplitude pair that differs only in bit `wire`,
    /// passing (index with bit clear, index with bit set).
    #[inline]
    fn for_each_pair(&mut self, wire: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let step = 1 << wire;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for offset in base..base + step {
                // Split borrow: offset and offset+step never alias.
                let (lo, hi) = self.amps.split_at_mut(offset + step);
                f(&mut lo[offset], &mut hi[0]);
            }
            base += 2 * step;
        }
    }

    fn apply_rx(&mut self, wire: usize, theta: f64) {
        self.check_wire(wire);
        let (s, c) = (theta / 2.0).sin_cos();
        let mis = Complex64::new(0.0, -s);
        self.for_each_pair(wire, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = c * x + mis * y;
            *a1 = mis * x + c * y;
        });
    }

    fn apply_ry(&mut self, wire: usize, theta: f64) {
        self.check_wire(wire);
        let (s, c) = (theta / 2.0).sin_cos();
        self.for_each_pair(wire, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = c * x - s * y;
            *a1 = s * x + c * y;
        });
    }

    fn apply_rz(&mut self, wire: usize, theta: f64) {
        self.check_wire(wire);
        let phase = Complex64::from_polar(1.0, theta / 2.0);
        let conj = phase.conj();
        self.for_each_pair(wire, |a0, a1| {
            *a0 *= conj;
            *a1 *= phase;
        });
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        self.check_wire(a);
        self.check_wire(b);
        assert!(a != b, "CZ wires must differ, got {a} twice");
        let mask = (1 << a) | (1 << b);
        for (basis, amp) in self.amps.iter_mut().enumerate() {
            if basis & mask == mask {
                *amp = -*amp;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        self.check_wire(control);
        self.check_wire(target);
        assert!(
            control != target,
            "CNOT wires must differ, got {control} twice"
        );
        let cbit = 1 << control;
        let tbit = 1 << target;
        for basis in 0..self.amps.len() {
            if basis & cbit != 0 && basis & tbit == 0 {
                self.amps.swap(basis, basis | tbit);
            }
        }
    }
}
