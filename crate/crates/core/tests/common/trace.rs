//! Loader and replay driver for the checked-in cart-pole trace fixture.
//!
//! The fixture was produced by `fixtures/gen_cartpole_trace.py`, an
//! independent pure-Python implementation of the same reference
//! dynamics. The scripted rollout is driven by the LCG below; the
//! replay regenerates the script and verifies the crate's environment
//! reproduces every recorded state.

use qrl_core::cartpole::CartPole;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct Fixture {
    pub scripted: ScriptedSection,
    pub constant_action: ConstantSection,
}

#[derive(Debug, Deserialize)]
pub struct ScriptedSection {
    pub initial_state: [f64; 4],
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Deserialize)]
pub struct StepRecord {
    pub action: u8,
    pub state: [f64; 4],
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub reset_state: Option<[f64; 4]>,
}

#[derive(Debug, Deserialize)]
pub struct ConstantSection {
    pub initial_state: [f64; 4],
    pub action: u8,
    pub states: Vec<[f64; 4]>,
}

pub fn load_fixture() -> Fixture {
    serde_json::from_str(include_str!("../fixtures/cartpole_trace.json"))
        .expect("fixture parses")
}

/// Knuth MMIX LCG, mirroring the Python generator exactly.
pub struct Lcg {
    state: u64,
}

impl Lcg {
    const MUL: u64 = 6364136223846793005;
    const INC: u64 = 1442695040888963407;
    pub const SCRIPT_SEED: u64 = 0x9E3779B97F4A7C15;

    pub fn new(seed: u64) -> Self {
        Lcg { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MUL).wrapping_add(Self::INC);
        self.state
    }

    /// Top 53 bits as a uniform draw in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / 9007199254740992.0
    }

    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }

    pub fn draw_state(&mut self) -> [f64; 4] {
        let mut s = [0.0; 4];
        for v in &mut s {
            *v = -0.05 + 0.1 * self.next_f64();
        }
        s
    }
}

/// Outcome of replaying the scripted section against the crate's
/// environment. All counts should be zero and the diff tiny.
#[derive(Debug)]
pub struct ReplayReport {
    pub max_abs_diff: f64,
    pub action_mismatches: usize,
    pub flag_mismatches: usize,
    pub reward_mismatches: usize,
    pub episode_ends: usize,
}

pub fn replay_scripted(section: &ScriptedSection) -> ReplayReport {
    let mut lcg = Lcg::new(Lcg::SCRIPT_SEED);
    let mut env = CartPole::new();

    let mut report = ReplayReport {
        max_abs_diff: 0.0,
        action_mismatches: 0,
        flag_mismatches: 0,
        reward_mismatches: 0,
        episode_ends: 0,
    };

    let start = lcg.draw_state();
    for (a, b) in start.iter().zip(&section.initial_state) {
        report.max_abs_diff = report.max_abs_diff.max((a - b).abs());
    }
    env.reset_to(start);

    for record in &section.steps {
        let action = lcg.next_bit();
        if action != record.action {
            report.action_mismatches += 1;
        }
        let out = env.step(action as usize);
        for (a, b) in out.observation.iter().zip(&record.state) {
            report.max_abs_diff = report.max_abs_diff.max((a - b).abs());
        }
        if out.reward != record.reward {
            report.reward_mismatches += 1;
        }
        if out.terminated != record.terminated || out.truncated != record.truncated {
            report.flag_mismatches += 1;
        }
        if out.done() {
            report.episode_ends += 1;
            let next = lcg.draw_state();
            if let Some(expected) = &record.reset_state {
                for (a, b) in next.iter().zip(expected) {
                    report.max_abs_diff = report.max_abs_diff.max((a - b).abs());
                }
            } else {
                report.flag_mismatches += 1;
            }
            env.reset_to(next);
        } else if record.reset_state.is_some() {
            report.flag_mismatches += 1;
        }
    }
    report
}

/// Max elementwise deviation over the constant-action section.
///
/// This section checks the raw equations of motion, not episode
/// bookkeeping (the scripted section covers that), so when the pole
/// passes the termination threshold mid-trace the environment is
/// re-armed at the same physical state and the trajectory continues.
pub fn replay_constant(section: &ConstantSection) -> f64 {
    let mut env = CartPole::new();
    env.reset_to(section.initial_state);
    let mut max_diff: f64 = 0.0;
    for expected in &section.states {
        let out = env.step(section.action as usize);
        for (a, b) in out.observation.iter().zip(expected) {
            max_diff = max_diff.max((a - b).abs());
        }
        if out.done() {
            env.reset_to(out.observation);
        }
    }
    max_diff
}
