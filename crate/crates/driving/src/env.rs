//! Simulated episodes on the intersection and trajectory logs.

use crate::geometry::Vec2;
use crate::hidden::belief_from_observation;
use crate::map::AgentKind;
use crate::model::DrivingModel;
use crate::state::{Agent, DrivingObservation, DrivingState, Ego, Hidden};
use guidedplan_core::env::{EnvStep, EpisodeStart, Environment, StepMetrics};
use guidedplan_core::scenarios::derive_seed;
use guidedplan_core::DomainModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;

const SPAWN_ATTEMPTS: usize = 200;
const SPAWN_CLEARANCE: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct DrivingEnv {
    model: DrivingModel,
    pub max_steps: usize,
    /// Particles in the belief handed out at reset.
    pub particles: usize,
    state: Option<DrivingState>,
    seed: u64,
    steps: usize,
}

impl DrivingEnv {
    pub fn new(model: DrivingModel, max_steps: usize, particles: usize) -> Self {
        Self {
            model,
            max_steps,
            particles,
            state: None,
            seed: 0,
            steps: 0,
        }
    }

    pub fn state(&self) -> Option<&DrivingState> {
        self.state.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Random scene: ego on one of its lanes, exo-agents at spawn points
    /// with room between all footprints.
    pub fn spawn(model: &DrivingModel, seed: u64) -> DrivingState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = &model.map;
        let lane = map.ego.lanes[rng.random_range(0..map.ego.lanes.len())];
        let path = &map.lanes[lane].path;
        let s = rng.random_range(map.ego.start_s.0..=map.ego.start_s.1);
        let ego = Ego {
            pos: path.point_at(s),
            heading: path.heading_at(s),
            speed: rng.random_range(3.0..=model.config.ego_max_speed),
            lane,
            s,
        };
        let mut state = DrivingState {
            ego,
            exos: Vec::with_capacity(model.config.exo_count),
            collided: false,
            invalid_lane: false,
        };
        let inflate = |mut b: crate::geometry::Obb| {
            b.half_length += SPAWN_CLEARANCE / 2.0;
            b.half_width += SPAWN_CLEARANCE / 2.0;
            b
        };
        for _ in 0..model.config.exo_count {
            let mut placed = None;
            for _ in 0..SPAWN_ATTEMPTS {
                let sp = map.spawns[rng.random_range(0..map.spawns.len())];
                let route = &map.routes[sp.route];
                let s = rng.random_range(sp.s.0..=sp.s.1);
                let speed = rng.random_range(sp.speed.0..=sp.speed.1);
                let attentive = rng.random_bool(model.config.p_attentive);
                let a = Agent {
                    kind: route.kind,
                    pos: route.path.point_at(s),
                    heading: route.path.heading_at(s),
                    speed,
                    hidden: Hidden { route: sp.route, attentive },
                    cruise: speed,
                    active: true,
                };
                let b = inflate(model.footprint(a.kind, a.pos, a.heading));
                let clear = !crate::geometry::overlaps(&b, &model.footprint(AgentKind::Car, state.ego.pos, state.ego.heading))
                    && state
                        .exos
                        .iter()
                        .all(|o| !crate::geometry::overlaps(&b, &model.footprint(o.kind, o.pos, o.heading)));
                if clear {
                    placed = Some(a);
                    break;
                }
            }
            let a = placed.unwrap_or_else(|| Agent {
                kind: AgentKind::Pedestrian,
                pos: Vec2::new(1e4, 1e4),
                heading: 0.0,
                speed: 0.0,
                hidden: Hidden { route: 0, attentive: false },
                cruise: 0.0,
                active: false,
            });
            state.exos.push(a);
        }
        state
    }
}

impl Environment for DrivingEnv {
    type Model = DrivingModel;

    fn model(&self) -> &DrivingModel {
        &self.model
    }

    fn reset(&mut self, seed: u64) -> EpisodeStart<DrivingState, DrivingObservation> {
        self.seed = seed;
        self.steps = 0;
        let state = Self::spawn(&self.model, derive_seed(seed, 0));
        let observation = DrivingObservation::of(&state);
        let belief = belief_from_observation(&self.model, &observation, self.particles, derive_seed(seed, 1))
            .expect("particle count is positive");
        self.state = Some(state);
        EpisodeStart {
            belief,
            observation: Some(observation),
        }
    }

    fn step(&mut self, action: usize) -> EnvStep<DrivingObservation> {
        let state = self.state.as_ref().expect("reset before step");
        self.steps += 1;
        let out = self.model.step(state, action, derive_seed(self.seed, 1000 + self.steps as u64));
        let rl_reward = self.model.smooth_reward(state, action, &out.state);
        let ttc = self.model.ttc(&out.state);
        let metrics = StepMetrics {
            speed: out.state.ego.speed,
            ttc,
            near_miss: ttc < crate::model::NEAR_MISS_TTC,
            collision: out.state.collided && !state.collided,
        };
        let done = self.model.is_terminal(&out.state) || self.steps >= self.max_steps;
        self.state = Some(out.state);
        EnvStep {
            observation: out.observation,
            reward: out.reward,
            rl_reward,
            done,
            metrics,
        }
    }
}

/// One row of a trajectory log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub action: usize,
    pub safe: f64,
    pub collision: f64,
    pub rl_reward: f64,
    pub ttc: f64,
    pub near_miss: bool,
}

pub const TRAJECTORY_HEADER: &str = "step,x,y,heading,speed,action,reward_safe,reward_collision,rl_reward,ttc,near_miss";

pub fn write_trajectory_csv<W: Write>(mut w: W, rows: &[TrajectoryRow]) -> std::io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.step,
            r.x,
            r.y,
            r.heading,
            r.speed,
            r.action,
            r.safe,
            r.collision,
            r.rl_reward,
            r.ttc,
            u8::from(r.near_miss)
        )?;
    }
    Ok(())
}
