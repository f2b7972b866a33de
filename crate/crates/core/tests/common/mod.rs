//! Independent reference implementations ("oracles") used to validate the
//! production simulator and gradient paths. Everything here goes through
//! dense matrices built from first principles — Kronecker products of
//! explicit 2x2 gate matrices — or through numerical differentiation, and
//! deliberately shares no kernel code with the crate under test.

#![allow(dead_code)] // each integration-test binary uses a subset

pub mod trace;

use num_complex::Complex64;
use rand::Rng;

use qrl_core::sim::{AngleSlot, CircuitSpec, GateOp};

pub type Matrix = Vec<Vec<Complex64>>;

pub fn identity(n: usize) -> Matrix {
    let mut m = vec![vec![Complex64::ZERO; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::ONE;
    }
    m
}

/// Kronecker product with `b` as the fast (low-bit) factor:
/// `out[ia*nb + ib][ja*nb + jb] = a[ia][ja] * b[ib][jb]`.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (na, nb) = (a.len(), b.len());
    let n = na * nb;
    let mut out = vec![vec![Complex64::ZERO; n]; n];
    for ia in 0..na {
        for ja in 0..na {
            for ib in 0..nb {
                for jb in 0..nb {
                    out[ia * nb + ib][ja * nb + jb] = a[ia][ja] * b[ib][jb];
                }
            }
        }
    }
    out
}

/// The 2x2 rotation matrices, written straight from the
/// `exp(-i theta P / 2)` closed forms.
fn rotation_2x2(gate: &GateOp, theta: f64) -> Matrix {
    let half = theta / 2.0;
    let (s, c) = half.sin_cos();
    match gate {
        GateOp::Rx { .. } => vec![
            vec![Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            vec![Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        GateOp::Ry { .. } => vec![
            vec![Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            vec![Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        GateOp::Rz { .. } => vec![
            vec![Complex64::from_polar(1.0, -half), Complex64::ZERO],
            vec![Complex64::ZERO, Complex64::from_polar(1.0, half)],
        ],
        _ => unreachable!("not a rotation"),
    }
}

/// Full `2^q x 2^q` unitary for one gate, built by Kronecker-embedding the
/// small matrix (single-qubit case) or by explicit bit bookkeeping
/// (two-qubit case).
pub fn dense_gate_matrix(gate: &GateOp, theta: f64, num_qubits: usize) -> Matrix {
    let dim = 1usize << num_qubits;
    match gate {
        GateOp::Rx { wire, .. } | GateOp::Ry { wire, .. } | GateOp::Rz { wire, .. } => {
            let g = rotation_2x2(gate, theta);
            let low = identity(1 << wire);
            let high = identity(1 << (num_qubits - 1 - wire));
            kron(&high, &kron(&g, &low))
        }
        GateOp::Cz { a, b } => {
            let mut m = identity(dim);
            let mask = (1usize << a) | (1usize << b);
            for (i, row) in m.iter_mut().enumerate() {
                if i & mask == mask {
                    row[i] = -Complex64::ONE;
                }
            }
            m
        }
        GateOp::Cnot { control, target } => {
            let mut m = vec![vec![Complex64::ZERO; dim]; dim];
            for j in 0..dim {
                let i = if j & (1 << control) != 0 { j ^ (1 << target) } else { j };
                m[i][j] = Complex64::ONE;
            }
            m
        }
    }
}

pub fn dense_matvec(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn resolve_angle(gate: &GateOp, inputs: &[f64], params: &[f64]) -> f64 {
    match gate.angle_slot() {
        Some(AngleSlot::Input(i)) => inputs[i],
        Some(AngleSlot::Trainable(t)) => params[t],
        Some(AngleSlot::Fixed(v)) => v,
        None => 0.0,
    }
}

/// Runs a circuit by dense matrix-vector products from `|0...0>`.
pub fn dense_run(circuit: &CircuitSpec, inputs: &[f64], params: &[f64]) -> Vec<Complex64> {
    let dim = 1usize << circuit.num_qubits();
    let mut state = vec![Complex64::ZERO; dim];
    state[0] = Complex64::ONE;
    for gate in circuit.gates() {
        let theta = resolve_angle(gate, inputs, params);
        let m = dense_gate_matrix(gate, theta, circuit.num_qubits());
        state = dense_matvec(&m, &state);
    }
    state
}

/// Z expectations from amplitudes via an explicit probability vector.
pub fn dense_z_expectations(state: &[Complex64], num_qubits: usize) -> Vec<f64> {
    let probs: Vec<f64> = state.iter().map(|a| a.norm_sqr()).collect();
    (0..num_qubits)
        .map(|k| {
            let mut z = 0.0;
            for (basis, p) in probs.iter().enumerate() {
                z += if basis & (1 << k) == 0 { *p } else { -*p };
            }
            z
        })
        .collect()
}

/// Central finite differences of a scalar function of the parameters.
pub fn finite_diff_grad(
    f: &mut dyn FnMut(&[f64]) -> f64,
    params: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut grad = Vec::with_capacity(params.len());
    let mut p = params.to_vec();
    for i in 0..params.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = f(&p);
        p[i] = orig - h;
        let dn = f(&p);
        p[i] = orig;
        grad.push((up - dn) / (2.0 * h));
    }
    grad
}

/// A random circuit over up to `max_qubits` qubits and `max_gates` gates,
/// with a mix of trainable, input-bound, and fixed angles, plus matching
/// random inputs/params.
pub fn random_circuit(
    rng: &mut impl Rng,
    max_qubits: usize,
    max_gates: usize,
) -> (CircuitSpec, Vec<f64>, Vec<f64>) {
    let q = rng.random_range(1..=max_qubits);
    let n = rng.random_range(1..=max_gates);
    let mut gates = Vec::with_capacity(n);
    let mut next_trainable = 0;
    for _ in 0..n {
        let two_qubit_ok = q >= 2;
        let kind = rng.random_range(0..if two_qubit_ok { 5 } else { 3 });
        if kind < 3 {
            let wire = rng.random_range(0..q);
            let angle = match rng.random_range(0..3) {
                0 => {
                    let t = AngleSlot::Trainable(next_trainable);
                    next_trainable += 1;
                    t
                }
                1 => AngleSlot::Input(rng.random_range(0..4)),
                _ => AngleSlot::Fixed(rng.random_range(-3.0..3.0)),
            };
            gates.push(match kind {
                0 => GateOp::Rx { wire, angle },
                1 => GateOp::Ry { wire, angle },
                _ => GateOp::Rz { wire, angle },
            });
        } else {
            let a = rng.random_range(0..q);
            let mut b = rng.random_range(0..q);
            while b == a {
                b = rng.random_range(0..q);
            }
            gates.push(if kind == 3 {
                GateOp::Cz { a, b }
            } else {
                GateOp::Cnot { control: a, target: b }
            });
        }
    }
    let circuit = CircuitSpec::new(q, gates).expect("random circuit is structurally valid");
    let inputs: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
    let params: Vec<f64> = (0..circuit.num_trainable())
        .map(|_| rng.random_range(-3.0..3.0))
        .collect();
    (circuit, inputs, params)
}

/// Largest absolute component difference between two complex vectors.
pub fn max_amp_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
