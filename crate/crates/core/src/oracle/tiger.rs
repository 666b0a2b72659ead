//! The classic Tiger problem.
//!
//! A tiger sits behind the left or right door. Listening costs 1 and
//! reports the correct side with probability 0.85. Opening the safe door
//! pays +10, opening the tiger's door costs 100; either way the problem
//! resets with the tiger placed uniformly at random. The -100 is booked as
//! the collision factor so factored backups get exercised.

use crate::env::{EnvStep, EpisodeStart, Environment, StepMetrics};
use crate::pomdp::{Belief, DomainModel, Enumerable, Step};
use crate::reward::FactoredReward;
use crate::scenarios::{derive_seed, unit_f64};

pub const TIGER_LEFT: u8 = 0;
pub const TIGER_RIGHT: u8 = 1;

pub const LISTEN: usize = 0;
pub const OPEN_LEFT: usize = 1;
pub const OPEN_RIGHT: usize = 2;

pub const HEAR_LEFT: u8 = 0;
pub const HEAR_RIGHT: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TigerModel {
    pub listen_accuracy: f64,
    pub listen_reward: f64,
    pub correct_reward: f64,
    pub wrong_reward: f64,
    pub gamma: f64,
}

impl Default for TigerModel {
    fn default() -> Self {
        Self {
            listen_accuracy: 0.85,
            listen_reward: -1.0,
            correct_reward: 10.0,
            wrong_reward: -100.0,
            gamma: 0.95,
        }
    }
}

impl TigerModel {
    fn reward_of(&self, state: u8, action: usize) -> FactoredReward {
        match action {
            LISTEN => FactoredReward::new(self.listen_reward, 0.0),
            OPEN_LEFT if state == TIGER_RIGHT => FactoredReward::new(self.correct_reward, 0.0),
            OPEN_RIGHT if state == TIGER_LEFT => FactoredReward::new(self.correct_reward, 0.0),
            _ => FactoredReward::new(0.0, self.wrong_reward),
        }
    }
}

impl DomainModel for TigerModel {
    type State = u8;
    type Observation = u8;

    fn action_count(&self) -> usize {
        3
    }

    fn step(&self, state: &u8, action: usize, seed: u64) -> Step<u8, u8> {
        let u1 = unit_f64(derive_seed(seed, 0));
        let u2 = unit_f64(derive_seed(seed, 1));
        let reward = self.reward_of(*state, action);
        let (next, obs) = if action == LISTEN {
            let correct = u1 < self.listen_accuracy;
            let obs = if correct == (*state == TIGER_LEFT) { HEAR_LEFT } else { HEAR_RIGHT };
            (*state, obs)
        } else {
            let next = if u1 < 0.5 { TIGER_LEFT } else { TIGER_RIGHT };
            (next, if u2 < 0.5 { HEAR_LEFT } else { HEAR_RIGHT })
        };
        Step {
            state: next,
            observation: obs,
            reward,
        }
    }

    fn is_terminal(&self, _state: &u8) -> bool {
        false
    }

    /// Always listen. Being state-independent, the rollout policy is
    /// realizable inside the belief tree, so rollouts are true lower bounds.
    fn default_action(&self, _state: &u8) -> usize {
        LISTEN
    }

    fn upper_bound(&self, _state: &u8) -> f64 {
        self.correct_reward / (1.0 - self.gamma)
    }

    fn feature_len(&self) -> usize {
        3 * crate::search::HISTORY_FRAMES
    }

    /// Per frame slot (right-aligned, most recent last): hear-left,
    /// hear-right, present.
    fn encode_history(&self, frames: &[u8]) -> Vec<f64> {
        let slots = crate::search::HISTORY_FRAMES;
        let mut out = vec![0.0; 3 * slots];
        let recent = &frames[frames.len().saturating_sub(slots)..];
        let offset = slots - recent.len();
        for (i, z) in recent.iter().enumerate() {
            let base = 3 * (offset + i);
            out[base + *z as usize] = 1.0;
            out[base + 2] = 1.0;
        }
        out
    }

    fn mean_reward(&self, state: &u8, action: usize) -> FactoredReward {
        self.reward_of(*state, action)
    }
}

impl Enumerable for TigerModel {
    fn states(&self) -> Vec<u8> {
        vec![TIGER_LEFT, TIGER_RIGHT]
    }

    fn state_index(&self, state: &u8) -> usize {
        *state as usize
    }

    fn observations(&self) -> Vec<u8> {
        vec![HEAR_LEFT, HEAR_RIGHT]
    }

    fn transition(&self, state: &u8, action: usize, next: &u8) -> f64 {
        if action == LISTEN {
            if state == next {
                1.0
            } else {
                0.0
            }
        } else {
            0.5
        }
    }

    fn observation_prob(&self, next: &u8, action: usize, obs: &u8) -> f64 {
        if action == LISTEN {
            if obs == next {
                self.listen_accuracy
            } else {
                1.0 - self.listen_accuracy
            }
        } else {
            0.5
        }
    }

    fn reward(&self, state: &u8, action: usize) -> FactoredReward {
        self.reward_of(*state, action)
    }
}

/// Tiger as an environment: the tiger is placed by the reset seed and
/// re-placed after every door opening. Episodes never terminate on their
/// own; actors cap them.
#[derive(Debug, Clone)]
pub struct TigerEnv {
    model: TigerModel,
    state: u8,
    seed: u64,
    steps: u64,
}

impl TigerEnv {
    pub fn new(model: TigerModel) -> Self {
        Self {
            model,
            state: TIGER_LEFT,
            seed: 0,
            steps: 0,
        }
    }

    pub fn state(&self) -> u8 {
        self.state
    }
}

impl Environment for TigerEnv {
    type Model = TigerModel;

    fn model(&self) -> &TigerModel {
        &self.model
    }

    fn reset(&mut self, seed: u64) -> EpisodeStart<u8, u8> {
        self.seed = seed;
        self.steps = 0;
        self.state = if unit_f64(derive_seed(seed, 0)) < 0.5 { TIGER_LEFT } else { TIGER_RIGHT };
        EpisodeStart {
            belief: Belief::uniform(vec![TIGER_LEFT, TIGER_RIGHT]).expect("two states"),
            observation: None,
        }
    }

    fn step(&mut self, action: usize) -> EnvStep<u8> {
        self.steps += 1;
        let out = self.model.step(&self.state, action, derive_seed(self.seed, self.steps));
        self.state = out.state;
        EnvStep {
            observation: out.observation,
            reward: out.reward,
            rl_reward: out.reward.total(),
            done: false,
            metrics: StepMetrics::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_stochastic() {
        let m = TigerModel::default();
        for s in m.states() {
            for a in 0..3 {
                let t: f64 = m.states().iter().map(|n| m.transition(&s, a, n)).sum();
                assert!((t - 1.0).abs() < 1e-15);
                let o: f64 = m.observations().iter().map(|z| m.observation_prob(&s, a, z)).sum();
                assert!((o - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn step_frequencies_match_tables() {
        let m = TigerModel::default();
        let n = 20_000;
        let correct = (0..n)
            .filter(|&i| m.step(&TIGER_LEFT, LISTEN, derive_seed(99, i)).observation == HEAR_LEFT)
            .count();
        let p = correct as f64 / n as f64;
        assert!((p - 0.85).abs() < 4.0 * (0.85f64 * 0.15 / n as f64).sqrt());
    }

    #[test]
    fn history_encoding_is_right_aligned() {
        let m = TigerModel::default();
        let f = m.encode_history(&[HEAR_RIGHT]);
        assert_eq!(f.len(), 12);
        assert_eq!(&f[9..], &[0.0, 1.0, 1.0]);
        assert!(f[..9].iter().all(|x| *x == 0.0));
    }
}
