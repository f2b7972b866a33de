//! CartPole-v1 with the standard balance-task physics.
//!
//! Dynamics, constants, integration order, and episode bookkeeping follow
//! the widely used reference implementation exactly: semi-implicit-free
//! Euler at `tau = 0.02`, termination when the cart leaves `±2.4` or the
//! pole exceeds `±12°` (checked on the *new* state), truncation at 500
//! steps, and a reward of 1.0 on every step including the terminal one.
//! The observation is the raw state; there is no noise.

use rand::Rng;

pub const GRAVITY: f64 = 9.8;
pub const CART_MASS: f64 = 1.0;
pub const POLE_MASS: f64 = 0.1;
pub const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
/// Half the pole's length, as in the reference dynamics.
pub const POLE_HALF_LENGTH: f64 = 0.5;
pub const POLE_MASS_LENGTH: f64 = POLE_MASS * POLE_HALF_LENGTH;
pub const FORCE_MAG: f64 = 10.0;
/// Integration timestep in seconds.
pub const TAU: f64 = 0.02;
/// Cart position beyond which the episode terminates.
pub const X_THRESHOLD: f64 = 2.4;
/// Pole angle (12 degrees in radians) beyond which the episode terminates.
pub const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
/// Episode length cap; reaching it truncates without terminating.
pub const MAX_EPISODE_STEPS: u32 = 500;

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub observation: [f64; 4],
    pub reward: f64,
    /// The new state violated a threshold.
    pub terminated: bool,
    /// The step cap was reached (can coincide with `terminated`).
    pub truncated: bool,
}

impl StepOutcome {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// The cart-pole system. State layout is
/// `[x, x_dot, theta, theta_dot]`.
#[derive(Debug, Clone)]
pub struct CartPole {
    state: [f64; 4],
    elapsed_steps: u32,
    done: bool,
}

impl CartPole {
    /// A fresh environment that must be reset before stepping.
    pub fn new() -> Self {
        CartPole {
            state: [0.0; 4],
            elapsed_steps: 0,
            done: true,
        }
    }

    /// Starts an episode from a state drawn uniformly from
    /// `[-0.05, 0.05]` per component and returns the initial observation.
    pub fn reset(&mut self, rng: &mut impl Rng) -> [f64; 4] {
        let mut state = [0.0; 4];
        for v in &mut state {
            *v = -0.05 + 0.1 * rng.random::<f64>();
        }
        self.reset_to(state)
    }

    /// Starts an episode from an explicit state (scripted traces, tests).
    pub fn reset_to(&mut self, state: [f64; 4]) -> [f64; 4] {
        self.state = state;
        self.elapsed_steps = 0;
        self.done = false;
        state
    }

    pub fn observation(&self) -> [f64; 4] {
        self.state
    }

    pub fn elapsed_steps(&self) -> u32 {
        self.elapsed_steps
    }

    /// Advances one timestep. `action` 0 pushes left, 1 pushes right.
    /// Panics on an out-of-range action or if the episode is already over:
    /// both are driver bugs that must not be papered over.
    pub fn step(&mut self, action: usize) -> StepOutcome {
        assert!(action <= 1, "action must be 0 or 1, got {action}");
        assert!(
            !self.done,
            "step called on a finished episode; reset first"
        );

        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
        let costheta = theta.cos();
        let sintheta = theta.sin();

        // Reference equations of motion, kept in the reference's exact
        // expression order so results agree bit for bit.
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sintheta) / TOTAL_MASS;
        let thetaacc = (GRAVITY * sintheta - costheta * temp)
            / (POLE_HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * costheta * costheta / TOTAL_MASS));
        let xacc = temp - POLE_MASS_LENGTH * thetaacc * costheta / TOTAL_MASS;

        // Explicit Euler: positions advance on the old velocities, then
        // velocities on the new accelerations.
        let x = x + TAU * x_dot;
        let x_dot = x_dot + TAU * xacc;
        let theta = theta + TAU * theta_dot;
        let theta_dot = theta_dot + TAU * thetaacc;
        self.state = [x, x_dot, theta, theta_dot];
        self.elapsed_steps += 1;

        let terminated = x < -X_THRESHOLD
            || x > X_THRESHOLD
            || theta < -THETA_THRESHOLD
            || theta > THETA_THRESHOLD;
        let truncated = self.elapsed_steps >= MAX_EPISODE_STEPS;
        self.done = terminated || truncated;

        StepOutcome {
            observation: self.state,
            reward: 1.0,
            terminated,
            truncated,
        }
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reset_draws_within_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut env = CartPole::new();
        for _ in 0..100 {
            let obs = env.reset(&mut rng);
            assert!(obs.iter().all(|v| (-0.05..0.05).contains(v)), "{obs:?}");
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut env = CartPole::new();
            let mut trace = vec![env.reset(&mut rng)];
            for i in 0.. {
                let out = env.step(i % 2);
                trace.push(out.observation);
                if out.done() {
                    break;
                }
            }
            trace
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    /// Push toward the side the pole is falling to: enough to balance
    /// essentially forever.
    fn reactive_action(obs: &[f64; 4]) -> usize {
        if obs[2] + 0.2 * obs[3] > 0.0 {
            1
        } else {
            0
        }
    }

    #[test]
    fn reactive_controller_survives_to_truncation() {
        let mut env = CartPole::new();
        env.reset_to([0.0, 0.0, 0.01, 0.0]);
        let mut out = env.step(1);
        while !out.done() {
            out = env.step(reactive_action(&out.observation));
        }
        assert!(out.truncated, "controller fell at step {}", env.elapsed_steps());
        assert!(!out.terminated);
        assert_eq!(env.elapsed_steps(), MAX_EPISODE_STEPS);
    }

    #[test]
    fn constant_push_terminates_quickly_with_full_reward() {
        let mut env = CartPole::new();
        env.reset_to([0.0; 4]);
        let mut total = 0.0;
        let mut last = None;
        for _ in 0..MAX_EPISODE_STEPS {
            let out = env.step(1);
            total += out.reward;
            if out.done() {
                last = Some(out);
                break;
            }
        }
        let last = last.expect("constant pushing must topple the pole");
        assert!(last.terminated);
        assert!(!last.truncated);
        // Reward is 1.0 per step including the terminal step.
        assert_eq!(total, env.elapsed_steps() as f64);
        // The pole falls (tipping against the push) long before the cart
        // travels 2.4 units.
        assert!(last.observation[2].abs() > THETA_THRESHOLD);
        assert!(last.observation[0].abs() < X_THRESHOLD);
    }

    #[test]
    fn termination_is_checked_on_the_new_state() {
        // Start just inside the angle threshold with a large angular
        // velocity: the very first step crosses it.
        let mut env = CartPole::new();
        env.reset_to([0.0, 0.0, THETA_THRESHOLD - 1e-4, 3.0]);
        let out = env.step(1);
        assert!(out.terminated);
        assert!(out.observation[2] > THETA_THRESHOLD);
        assert_eq!(out.reward, 1.0);
    }

    #[test]
    #[should_panic(expected = "finished episode")]
    fn stepping_after_done_panics() {
        let mut env = CartPole::new();
        env.reset_to([0.0, 0.0, THETA_THRESHOLD - 1e-4, 3.0]);
        env.step(1);
        env.step(1);
    }

    #[test]
    #[should_panic(expected = "action must be 0 or 1")]
    fn bad_action_panics() {
        let mut env = CartPole::new();
        env.reset_to([0.0; 4]);
        env.step(2);
    }

    #[test]
    #[should_panic(expected = "finished episode")]
    fn unreset_environment_panics_on_step() {
        let mut env = CartPole::new();
        env.step(0);
    }

    #[test]
    fn dynamics_are_mirror_symmetric() {
        // Negating the state and swapping the action negates the next
        // state: f(-s, 1-a) = -f(s, a).
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let state: [f64; 4] = [
                0.1 * (rng.random::<f64>() - 0.5),
                2.0 * (rng.random::<f64>() - 0.5),
                0.3 * (rng.random::<f64>() - 0.5),
                2.0 * (rng.random::<f64>() - 0.5),
            ];
            let action = rng.random_range(0..2usize);
            let mut a = CartPole::new();
            a.reset_to(state);
            let sa = a.step(action).observation;
            let mut b = CartPole::new();
            b.reset_to(state.map(|v| -v));
            let sb = b.step(1 - action).observation;
            for (x, y) in sa.iter().zip(&sb) {
                assert!((x + y).abs() < 1e-12, "{sa:?} vs {sb:?}");
            }
        }
    }
}
