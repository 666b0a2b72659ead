//! Sampling exo-agent intentions and attention consistent with what is
//! observed, and building beliefs from observations.

use crate::geometry::wrap_angle;
use crate::map::AgentKind;
use crate::model::DrivingModel;
use crate::state::{cell_center, Agent, DrivingObservation, DrivingState, Ego, Hidden};
use guidedplan_core::scenarios::derive_seed;
use guidedplan_core::{Belief, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Distance from a route within which an agent counts as on it.
pub const ROUTE_TOLERANCE: f64 = 1.5;
pub const HEADING_TOLERANCE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSample {
    /// One entry per exo-agent; inactive agents keep their previous value.
    pub hidden: Vec<Hidden>,
    /// Agents with no consistent route that were put on the nearest one.
    pub unmatched: Vec<usize>,
}

/// Routes an agent could be following given its pose.
pub fn feasible_routes(model: &DrivingModel, agent: &Agent) -> Vec<usize> {
    model
        .map
        .routes
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == agent.kind)
        .filter(|(_, r)| {
            let p = r.path.project(agent.pos);
            let aligned = agent.kind == AgentKind::Pedestrian
                || wrap_angle(agent.heading - r.path.heading_at(p.s)).abs() <= HEADING_TOLERANCE;
            p.distance <= ROUTE_TOLERANCE && p.s < r.path.length() - 1.0 && aligned
        })
        .map(|(i, _)| i)
        .collect()
}

pub fn sample_hidden(model: &DrivingModel, state: &DrivingState, seed: u64) -> HiddenSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unmatched = Vec::new();
    let hidden = state
        .exos
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let feasible = feasible_routes(model, a);
            let u: f64 = rng.random();
            let attentive = rng.random_bool(model.config.p_attentive);
            if !a.active {
                return a.hidden;
            }
            let route = if feasible.is_empty() {
                unmatched.push(i);
                nearest_route(model, a)
            } else {
                feasible[((u * feasible.len() as f64) as usize).min(feasible.len() - 1)]
            };
            Hidden { route, attentive }
        })
        .collect();
    HiddenSample { hidden, unmatched }
}

fn nearest_route(model: &DrivingModel, a: &Agent) -> usize {
    model
        .map
        .routes
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == a.kind)
        .min_by(|x, y| {
            x.1.path
                .project(a.pos)
                .distance
                .total_cmp(&y.1.path.project(a.pos).distance)
        })
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Physical state read off an observation, with placeholder hidden values.
pub fn state_from_observation(model: &DrivingModel, obs: &DrivingObservation) -> DrivingState {
    let (pos, speed, heading) = cell_center(&obs.ego);
    let (lane, proj) = model
        .map
        .ego
        .lanes
        .iter()
        .map(|&l| (l, model.map.lanes[l].path.project(pos)))
        .min_by(|a, b| a.1.distance.total_cmp(&b.1.distance))
        .expect("map has ego lanes");
    let exos = obs
        .exos
        .iter()
        .map(|o| match o {
            Some(o) => {
                let (pos, speed, heading) = cell_center(&o.cell);
                Agent {
                    kind: o.kind,
                    pos,
                    heading,
                    speed,
                    hidden: Hidden { route: 0, attentive: false },
                    cruise: speed,
                    active: true,
                }
            }
            None => Agent {
                kind: AgentKind::Car,
                pos: Default::default(),
                heading: 0.0,
                speed: 0.0,
                hidden: Hidden { route: 0, attentive: false },
                cruise: 0.0,
                active: false,
            },
        })
        .collect();
    DrivingState {
        ego: Ego {
            pos,
            heading,
            speed,
            lane,
            s: proj.s,
        },
        exos,
        collided: false,
        invalid_lane: false,
    }
}

/// Equally weighted particles sharing the observed physical state and
/// differing in sampled intentions and attention.
pub fn belief_from_observation(
    model: &DrivingModel,
    obs: &DrivingObservation,
    particles: usize,
    seed: u64,
) -> Result<Belief<DrivingState>> {
    let base = state_from_observation(model, obs);
    let states = (0..particles as u64)
        .map(|i| {
            let h = sample_hidden(model, &base, derive_seed(seed, i));
            let mut s = base.clone();
            for (a, hid) in s.exos.iter_mut().zip(h.hidden) {
                a.hidden = hid;
            }
            s
        })
        .collect();
    Belief::uniform(states)
}

/// Replaces a particle's physical state with the observed one, keeping its
/// hidden values unless its route no longer fits the observed pose.
pub fn assimilate(model: &DrivingModel, mut state: DrivingState, obs: &DrivingObservation, seed: u64) -> DrivingState {
    let (pos, speed, heading) = cell_center(&obs.ego);
    state.ego.pos = pos;
    state.ego.speed = speed;
    state.ego.heading = heading;
    state.ego.s = model.map.lanes[state.ego.lane].path.project(pos).s;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (a, o) in state.exos.iter_mut().zip(&obs.exos) {
        let Some(o) = o else {
            a.active = false;
            continue;
        };
        let (pos, speed, heading) = cell_center(&o.cell);
        a.kind = o.kind;
        a.pos = pos;
        a.speed = speed;
        a.heading = heading;
        a.active = true;
        let feasible = feasible_routes(model, a);
        if !feasible.contains(&a.hidden.route) {
            a.hidden.route = if feasible.is_empty() {
                nearest_route(model, a)
            } else {
                feasible[rng.random_range(0..feasible.len())]
            };
        }
    }
    state
}
