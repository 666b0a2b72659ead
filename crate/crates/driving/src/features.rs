//! Ego-centric history features.
//!
//! Layout, frames oldest first and right-aligned into four slots:
//! ego speed per slot, then per slot and per selected exo-agent eight
//! values (relative x and y, velocity x and y in the ego frame, cosine and
//! sine of relative heading, pedestrian flag, presence flag), then five
//! lane values (lateral offset, heading error, left lane exists, right lane
//! exists, distance to goal). Exo-agents are chosen by distance in the
//! newest frame.

use crate::geometry::{wrap_angle, Vec2};
use crate::map::{AgentKind, LaneGraph};
use crate::model::DrivingConfig;
use crate::state::{cell_center, DrivingObservation, DrivingState};

pub const FRAMES: usize = 4;
const PER_AGENT: usize = 8;
const LANE_FEATURES: usize = 5;
const POSITION_SCALE: f64 = 20.0;
const SPEED_SCALE: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAgent {
    pub kind: AgentKind,
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
}

/// Physical snapshot of the scene, as seen or as simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub ego: FrameAgent,
    pub exos: Vec<Option<FrameAgent>>,
}

impl Frame {
    pub fn from_observation(o: &DrivingObservation) -> Self {
        let agent = |kind, c| {
            let (pos, speed, heading) = cell_center(c);
            FrameAgent { kind, pos, heading, speed }
        };
        Self {
            ego: agent(AgentKind::Car, &o.ego),
            exos: o.exos.iter().map(|a| a.as_ref().map(|a| agent(a.kind, &a.cell))).collect(),
        }
    }

    pub fn from_state(s: &DrivingState) -> Self {
        Self {
            ego: FrameAgent {
                kind: AgentKind::Car,
                pos: s.ego.pos,
                heading: s.ego.heading,
                speed: s.ego.speed,
            },
            exos: s
                .exos
                .iter()
                .map(|a| {
                    a.active.then_some(FrameAgent {
                        kind: a.kind,
                        pos: a.pos,
                        heading: a.heading,
                        speed: a.speed,
                    })
                })
                .collect(),
        }
    }

    pub fn transformed(&self, rotation: f64, shift: Vec2) -> Self {
        let t = |a: &FrameAgent| FrameAgent {
            pos: a.pos.rotate(rotation) + shift,
            heading: wrap_angle(a.heading + rotation),
            ..*a
        };
        Self {
            ego: t(&self.ego),
            exos: self.exos.iter().map(|a| a.as_ref().map(t)).collect(),
        }
    }
}

pub fn feature_len(nearest: usize) -> usize {
    FRAMES + FRAMES * nearest * PER_AGENT + LANE_FEATURES
}

pub fn encode_frames(map: &LaneGraph, config: &DrivingConfig, frames: &[Frame]) -> Vec<f64> {
    let k = config.nearest_agents;
    let mut out = vec![0.0; feature_len(k)];
    let Some(current) = frames.last() else {
        return out;
    };
    let frames = &frames[frames.len().saturating_sub(FRAMES)..];
    let first_slot = FRAMES - frames.len();
    let origin = current.ego.pos;
    let yaw = current.ego.heading;
    let to_ego = |p: Vec2| (p - origin).rotate(-yaw);

    let mut order: Vec<(f64, usize)> = current
        .exos
        .iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|a| ((a.pos - origin).norm(), i)))
        .filter(|(d, _)| *d <= config.sensing_radius)
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.truncate(k);

    for (f, frame) in frames.iter().enumerate() {
        let slot = first_slot + f;
        out[slot] = frame.ego.speed / SPEED_SCALE;
        for (j, &(_, idx)) in order.iter().enumerate() {
            let Some(a) = frame.exos.get(idx).copied().flatten() else {
                continue;
            };
            let base = FRAMES + (slot * k + j) * PER_AGENT;
            let rel = to_ego(a.pos).scale(1.0 / POSITION_SCALE);
            let vel = Vec2::from_angle(a.heading).scale(a.speed).rotate(-yaw).scale(1.0 / SPEED_SCALE);
            let dh = a.heading - yaw;
            out[base..base + PER_AGENT].copy_from_slice(&[
                rel.x,
                rel.y,
                vel.x,
                vel.y,
                dh.cos(),
                dh.sin(),
                f64::from(a.kind == AgentKind::Pedestrian),
                1.0,
            ]);
        }
    }

    let base = FRAMES + FRAMES * k * PER_AGENT;
    let nearest_lane = map
        .ego
        .lanes
        .iter()
        .map(|&l| (l, map.lanes[l].path.project(origin)))
        .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance));
    if let Some((l, proj)) = nearest_lane {
        let lane = &map.lanes[l];
        out[base..].copy_from_slice(&[
            proj.lateral / 3.5,
            (yaw - lane.path.heading_at(proj.s)).sin(),
            f64::from(lane.left.is_some()),
            f64::from(lane.right.is_some()),
            (map.ego.goal_s - proj.s) / 100.0,
        ]);
    }
    out
}
