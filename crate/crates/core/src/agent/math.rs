//! Numeric building blocks for the agents: stable softmax and categorical
//! distributions, orthogonal weight initialization, global gradient-norm
//! clipping, and bias-corrected Adam.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Numerically stable softmax (max-subtracted). Panics on non-finite
/// logits: by the time logits are non-finite the run is already broken,
/// and sampling from garbage would hide it.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    assert!(
        logits.iter().all(|v| v.is_finite()),
        "non-finite logits: {logits:?}"
    );
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// A categorical distribution over action indices, built from logits.
#[derive(Debug, Clone)]
pub struct Categorical {
    probs: Vec<f64>,
    log_probs: Vec<f64>,
}

impl Categorical {
    pub fn from_logits(logits: &[f64]) -> Self {
        let probs = softmax(logits);
        // log p computed from the logits directly (not ln of the ratio)
        // for accuracy near 0.
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = logits
            .iter()
            .map(|z| (z - max).exp())
            .sum::<f64>()
            .ln();
        let log_probs = logits.iter().map(|z| z - max - log_sum).collect();
        Categorical { probs, log_probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Inverse-CDF sampling from one uniform draw.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    /// Log-probability of `action`; always `<= 0`.
    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action].min(0.0)
    }

    /// Shannon entropy `-sum p ln p` in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .zip(&self.log_probs)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, lp)| p * lp)
            .sum::<f64>()
    }

    /// Gradient of `log_prob(action)` with respect to the logits:
    /// `onehot(action) - p`.
    pub fn dlogp_dlogits(&self, action: usize) -> Vec<f64> {
        let mut g: Vec<f64> = self.probs.iter().map(|p| -p).collect();
        g[action] += 1.0;
        g
    }

    /// Gradient of the entropy with respect to the logits:
    /// `dH/dz_j = -p_j (ln p_j + H)`.
    pub fn dentropy_dlogits(&self) -> Vec<f64> {
        let h = self.entropy();
        self.probs
            .iter()
            .zip(&self.log_probs)
            .map(|(p, lp)| if *p > 0.0 { -p * (lp + h) } else { 0.0 })
            .collect()
    }
}

/// Fills a row-major `rows x cols` matrix with a gain-scaled orthogonal
/// frame: orthonormal rows when `rows <= cols`, orthonormal columns
/// otherwise. Gram-Schmidt on a Gaussian draw; the positive-norm
/// normalization plays the role of the usual QR sign fix.
pub fn orthogonal_matrix(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Vec<f64> {
    assert!(rows > 0 && cols > 0, "orthogonal init needs a real matrix");
    let transpose = rows < cols;
    let (tall_r, tall_c) = if transpose { (cols, rows) } else { (rows, cols) };
    // Column-major storage of the tall matrix: columns are contiguous.
    let mut cols_v: Vec<Vec<f64>> = (0..tall_c)
        .map(|_| {
            (0..tall_r)
                .map(|_| StandardNormal.sample(rng))
                .collect::<Vec<f64>>()
        })
        .collect();
    // Modified Gram-Schmidt with a second orthogonalization pass per
    // column for stability.
    for j in 0..tall_c {
        for _ in 0..2 {
            for k in 0..j {
                let dot: f64 = (0..tall_r).map(|i| cols_v[j][i] * cols_v[k][i]).sum();
                for i in 0..tall_r {
                    cols_v[j][i] -= dot * cols_v[k][i];
                }
            }
        }
        let norm = (0..tall_r)
            .map(|i| cols_v[j][i] * cols_v[j][i])
            .sum::<f64>()
            .sqrt();
        assert!(norm > 1e-12, "degenerate Gaussian draw in orthogonal init");
        for i in 0..tall_r {
            cols_v[j][i] /= norm;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for (r, row) in out.chunks_mut(cols).enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            // Tall matrix entry (i, j); transposing swaps the roles.
            let val = if transpose { cols_v[r][c] } else { cols_v[c][r] };
            *v = gain * val;
        }
    }
    out
}

/// Scales `grads` in place so its global L2 norm is at most `max_norm`;
/// returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Adam moment buffers, one entry per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-5;

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        AdamState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    /// One bias-corrected Adam update of `params` along `grads` (gradient
    /// descent: parameters move against the gradient).
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * grads[i];
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
}
