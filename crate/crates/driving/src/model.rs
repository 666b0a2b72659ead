//! The driving POMDP: dynamics, factored rewards, time to collision and
//! the planner-facing model interface.

use crate::features::{encode_frames, feature_len, Frame};
use crate::geometry::{overlaps, time_to_collision, wrap_angle, Obb, Path, Vec2};
use crate::map::{AgentKind, LaneGraph};
use crate::state::{
    cell_center, AccelCommand, Agent, DrivingAction, DrivingObservation, DrivingState, LaneCommand, ACTION_COUNT,
};
use guidedplan_core::{DomainModel, FactoredReward, Step};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const NEAR_MISS_TTC: f64 = 0.33;
/// Lower clamp on time to collision in the shaped reward.
pub const MIN_SHAPING_TTC: f64 = 0.1;
/// Displacement noise is cut off radially at this many standard deviations.
pub const NOISE_TRUNCATION: f64 = 3.0;

/// Rollout policy used for lower bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefaultPolicy {
    /// Keep lane and speed.
    Cruise,
    /// Keep lane; brake when a collision is predicted within the
    /// configured horizon, otherwise speed up.
    Reactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivingConfig {
    pub dt: f64,
    pub noise_sigma: f64,
    pub ego_max_speed: f64,
    pub acceleration: f64,
    pub car_max_speed: f64,
    pub pedestrian_max_speed: f64,
    pub wheelbase: f64,
    pub car_length: f64,
    pub car_width: f64,
    pub pedestrian_size: f64,
    pub p_attentive: f64,
    pub exo_count: usize,
    /// Exo-agents encoded in the features, nearest first.
    pub nearest_agents: usize,
    /// Agents beyond this distance are left out of the features.
    pub sensing_radius: f64,
    /// Time to collision at which attentive agents start slowing down.
    pub avoidance_horizon: f64,
    pub reactive_horizon: f64,
    pub reactive_margin: f64,
    pub default_policy: DefaultPolicy,
    /// Observation kernel widths used by the particle filter.
    pub position_kernel: f64,
    pub speed_kernel: f64,
}

impl Default for DrivingConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 3.0,
            noise_sigma: 0.05,
            ego_max_speed: 6.0,
            acceleration: 3.0,
            car_max_speed: 8.0,
            pedestrian_max_speed: 2.0,
            wheelbase: 2.5,
            car_length: 4.2,
            car_width: 1.8,
            pedestrian_size: 0.6,
            p_attentive: 0.5,
            exo_count: 6,
            nearest_agents: 8,
            sensing_radius: 50.0,
            avoidance_horizon: 2.5,
            reactive_horizon: 2.0,
            reactive_margin: 1.0,
            default_policy: DefaultPolicy::Reactive,
            position_kernel: 0.5,
            speed_kernel: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivingModel {
    pub map: LaneGraph,
    pub config: DrivingConfig,
}

impl DrivingModel {
    pub fn new(map: LaneGraph, config: DrivingConfig) -> Self {
        Self { map, config }
    }

    pub fn footprint(&self, kind: AgentKind, pos: Vec2, heading: f64) -> Obb {
        let c = &self.config;
        let (l, w) = match kind {
            AgentKind::Car => (c.car_length, c.car_width),
            AgentKind::Pedestrian => (c.pedestrian_size, c.pedestrian_size),
        };
        Obb {
            center: pos,
            heading,
            half_length: l / 2.0,
            half_width: w / 2.0,
        }
    }

    fn ego_box(&self, s: &DrivingState) -> Obb {
        self.footprint(AgentKind::Car, s.ego.pos, s.ego.heading)
    }

    fn exo_box(&self, a: &Agent) -> Obb {
        self.footprint(a.kind, a.pos, a.heading)
    }

    /// Constant-velocity time to collision between the ego and the nearest
    /// exo-agent; infinity if no footprints ever meet.
    pub fn ttc(&self, s: &DrivingState) -> f64 {
        let eb = self.ego_box(s);
        let ev = s.ego.velocity();
        s.exos
            .iter()
            .filter(|a| a.active)
            .map(|a| time_to_collision(&eb, ev, &self.exo_box(a), a.velocity()))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_near_miss(&self, s: &DrivingState) -> bool {
        self.ttc(s) < NEAR_MISS_TTC
    }

    /// Whether the lane command moves the ego into an existing lane.
    fn target_lane(&self, s: &DrivingState, cmd: LaneCommand) -> Option<usize> {
        let lane = &self.map.lanes[s.ego.lane];
        match cmd {
            LaneCommand::Keep => None,
            LaneCommand::Left => lane.left,
            LaneCommand::Right => lane.right,
        }
    }

    pub fn reward(&self, state: &DrivingState, action: usize, next: &DrivingState) -> FactoredReward {
        let act = DrivingAction::from_index(action);
        let v = next.ego.speed;
        let vmax = self.config.ego_max_speed;
        let mut safe = 4.0 * (v - vmax) / vmax;
        if act.accel == AccelCommand::Dec {
            safe -= 0.1;
        }
        if self.target_lane(state, act.lane).is_some() {
            safe -= 4.0;
        }
        let collision = if next.collided && !state.collided {
            -1000.0 * (v * v + 0.5)
        } else {
            0.0
        };
        FactoredReward::new(safe, collision)
    }

    /// Dense shaped reward for policy-gradient learners.
    pub fn smooth_reward(&self, _state: &DrivingState, action: usize, next: &DrivingState) -> f64 {
        let act = DrivingAction::from_index(action);
        let tc = self.ttc(next).max(MIN_SHAPING_TTC);
        let lane = if act.lane == LaneCommand::Keep { 0.0 } else { 0.025 };
        0.05 * next.ego.speed / self.config.ego_max_speed - lane - 1.0 / (9.0 * tc * tc)
    }

    /// Time to collision with the ego footprint grown by the reactive
    /// margin on every side.
    fn guarded_ttc(&self, s: &DrivingState) -> f64 {
        let mut eb = self.ego_box(s);
        eb.half_length += self.config.reactive_margin;
        eb.half_width += self.config.reactive_margin / 2.0;
        let ev = s.ego.velocity();
        s.exos
            .iter()
            .filter(|a| a.active)
            .map(|a| time_to_collision(&eb, ev, &self.exo_box(a), a.velocity()))
            .fold(f64::INFINITY, f64::min)
    }

    fn reactive_action(&self, s: &DrivingState) -> usize {
        let keep = |a| DrivingAction { lane: LaneCommand::Keep, accel: a }.index();
        let tc = self.guarded_ttc(s);
        if tc < self.config.reactive_horizon {
            keep(AccelCommand::Dec)
        } else if tc < 2.0 * self.config.reactive_horizon || s.ego.speed >= self.config.ego_max_speed {
            keep(AccelCommand::Maintain)
        } else {
            keep(AccelCommand::Acc)
        }
    }

    /// Bicycle-model step steering toward a lookahead point on `path`.
    fn pursue(&self, pos: Vec2, heading: f64, speed: f64, path: &Path) -> (Vec2, f64) {
        let dt = self.config.dt;
        let l = self.config.wheelbase;
        let lookahead = (1.2 * speed).max(4.0);
        let s = path.project(pos).s;
        let target = path.point_at(s + lookahead);
        let alpha = wrap_angle((target - pos).angle() - heading);
        let steer = (2.0 * l * alpha.sin() / lookahead).atan().clamp(-0.6, 0.6);
        let next_pos = pos + Vec2::from_angle(heading).scale(speed * dt);
        (next_pos, wrap_angle(heading + speed / l * steer.tan() * dt))
    }

    fn exo_target_speed(&self, s: &DrivingState, i: usize) -> f64 {
        let a = &s.exos[i];
        if !a.hidden.attentive {
            return a.speed;
        }
        let dir = Vec2::from_angle(a.heading);
        let me = self.exo_box(a);
        let v = a.velocity();
        let mut tc = f64::INFINITY;
        let mut consider = |pos: Vec2, obb: Obb, vel: Vec2| {
            let d = pos - a.pos;
            if d.dot(dir) > 0.0 && d.norm() < 30.0 {
                tc = tc.min(time_to_collision(&me, v, &obb, vel));
            }
        };
        consider(s.ego.pos, self.ego_box(s), s.ego.velocity());
        for (j, o) in s.exos.iter().enumerate() {
            if j != i && o.active {
                consider(o.pos, self.exo_box(o), o.velocity());
            }
        }
        a.cruise * (tc / self.config.avoidance_horizon).min(1.0)
    }

    fn advance(&self, s: &DrivingState, action: usize, seed: u64) -> DrivingState {
        let c = &self.config;
        let act = DrivingAction::from_index(action);
        let mut next = s.clone();
        let accel = match act.accel {
            AccelCommand::Acc => c.acceleration,
            AccelCommand::Maintain => 0.0,
            AccelCommand::Dec => -c.acceleration,
        };
        let target = self.target_lane(s, act.lane);
        next.invalid_lane = act.lane != LaneCommand::Keep && target.is_none();
        let lane = target.unwrap_or(s.ego.lane);
        let v = (s.ego.speed + accel * c.dt).clamp(0.0, c.ego_max_speed);
        let path = &self.map.lanes[lane].path;
        let (pos, heading) = self.pursue(s.ego.pos, s.ego.heading, v, path);
        next.ego.pos = pos;
        next.ego.heading = heading;
        next.ego.speed = v;
        next.ego.lane = lane;

        for i in 0..s.exos.len() {
            let a = &s.exos[i];
            if !a.active {
                continue;
            }
            let cap = match a.kind {
                AgentKind::Car => c.car_max_speed,
                AgentKind::Pedestrian => c.pedestrian_max_speed,
            };
            let want = self.exo_target_speed(s, i);
            let v = (a.speed + (want - a.speed).clamp(-2.0 * c.acceleration * c.dt, c.acceleration * c.dt)).clamp(0.0, cap);
            let route = &self.map.routes[a.hidden.route].path;
            let n = &mut next.exos[i];
            n.speed = v;
            match a.kind {
                AgentKind::Car => {
                    let (p, h) = self.pursue(a.pos, a.heading, v, route);
                    n.pos = p;
                    n.heading = h;
                }
                AgentKind::Pedestrian => {
                    let s0 = route.project(a.pos).s;
                    let goal = route.point_at(s0 + v * c.dt + 0.5);
                    let d = goal - a.pos;
                    let dir = if d.norm() > 1e-9 { d.scale(1.0 / d.norm()) } else { Vec2::from_angle(a.heading) };
                    n.pos = a.pos + dir.scale(v * c.dt);
                    n.heading = dir.angle();
                }
            }
        }

        if c.noise_sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut noise = || {
                let n = Vec2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                let r = n.norm();
                let n = if r > NOISE_TRUNCATION { n.scale(NOISE_TRUNCATION / r) } else { n };
                n.scale(c.noise_sigma)
            };
            next.ego.pos = next.ego.pos + noise();
            for a in &mut next.exos {
                let n = noise();
                if a.active {
                    a.pos = a.pos + n;
                }
            }
        }

        for a in &mut next.exos {
            if a.active {
                let route = &self.map.routes[a.hidden.route].path;
                if route.project(a.pos).s >= route.length() - 0.5 {
                    a.active = false;
                }
            }
        }
        next.ego.s = self.map.lanes[lane].path.project(next.ego.pos).s;
        let eb = self.ego_box(&next);
        next.collided = s.collided || next.exos.iter().any(|a| a.active && overlaps(&eb, &self.exo_box(a)));
        next
    }

    /// Deterministic transition given the step's random draw `seed`.
    pub fn transition(&self, state: &DrivingState, action: usize, seed: u64) -> DrivingState {
        self.advance(state, action, seed)
    }

    fn frames(&self, frames: &[DrivingObservation]) -> Vec<Frame> {
        frames.iter().map(Frame::from_observation).collect()
    }

    /// Squared, kernel-scaled distance between two observations.
    fn observation_distance(&self, a: &DrivingObservation, b: &DrivingObservation) -> f64 {
        let c = &self.config;
        let cell = |x: &[i32; 4], y: &[i32; 4]| {
            let (p, v, _) = cell_center(x);
            let (q, w, _) = cell_center(y);
            (p - q).norm().powi(2) / (2.0 * c.position_kernel.powi(2)) + (v - w).powi(2) / (2.0 * c.speed_kernel.powi(2))
        };
        let mut d = cell(&a.ego, &b.ego);
        for (x, y) in a.exos.iter().zip(&b.exos) {
            d += match (x, y) {
                (Some(x), Some(y)) => cell(&x.cell, &y.cell),
                (None, None) => 0.0,
                _ => 8.0,
            };
        }
        d
    }
}

impl DomainModel for DrivingModel {
    type State = DrivingState;
    type Observation = DrivingObservation;

    fn action_count(&self) -> usize {
        ACTION_COUNT
    }

    fn step(&self, state: &DrivingState, action: usize, seed: u64) -> Step<DrivingState, DrivingObservation> {
        let next = self.advance(state, action, seed);
        let reward = self.reward(state, action, &next);
        Step {
            observation: DrivingObservation::of(&next),
            state: next,
            reward,
        }
    }

    fn is_terminal(&self, s: &DrivingState) -> bool {
        s.collided || s.ego.s >= self.map.ego.goal_s
    }

    fn default_action(&self, s: &DrivingState) -> usize {
        match self.config.default_policy {
            DefaultPolicy::Cruise => DrivingAction::KEEP_MAINTAIN,
            DefaultPolicy::Reactive => self.reactive_action(s),
        }
    }

    fn upper_bound(&self, _s: &DrivingState) -> f64 {
        0.0
    }

    fn feature_len(&self) -> usize {
        feature_len(self.config.nearest_agents)
    }

    fn encode_history(&self, frames: &[DrivingObservation]) -> Vec<f64> {
        encode_frames(&self.map, &self.config, &self.frames(frames))
    }

    fn assimilate(&self, predicted: DrivingState, observation: &DrivingObservation, seed: u64) -> DrivingState {
        crate::hidden::assimilate(self, predicted, observation, seed)
    }

    fn observation_likelihood(&self, predicted: &DrivingObservation, received: &DrivingObservation) -> f64 {
        if predicted.exos.len() != received.exos.len() {
            return 0.0;
        }
        (-self.observation_distance(predicted, received)).exp()
    }
}
