//! States, actions and discretized observations.

use crate::geometry::{wrap_angle, Vec2};
use crate::map::{AgentKind, LaneId, RouteId};

pub const POSITION_RESOLUTION: f64 = 0.5;
pub const SPEED_RESOLUTION: f64 = 0.25;
pub const HEADING_RESOLUTION: f64 = 0.1;

/// Intention and attention of an exo-agent; never observed directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hidden {
    pub route: RouteId,
    pub attentive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub kind: AgentKind,
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub hidden: Hidden,
    /// Speed an attentive agent returns to once its path is clear.
    pub cruise: f64,
    pub active: bool,
}

impl Agent {
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading).scale(self.speed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ego {
    pub pos: Vec2,
    pub heading: f64,
    pub speed: f64,
    pub lane: LaneId,
    /// Arc length along the current lane.
    pub s: f64,
}

impl Ego {
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading).scale(self.speed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivingState {
    pub ego: Ego,
    pub exos: Vec<Agent>,
    pub collided: bool,
    /// Set when the last lane command had no lane to move into.
    pub invalid_lane: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LaneCommand {
    Left,
    Keep,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccelCommand {
    Acc,
    Maintain,
    Dec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DrivingAction {
    pub lane: LaneCommand,
    pub accel: AccelCommand,
}

pub const ACTION_COUNT: usize = 9;

impl DrivingAction {
    pub const KEEP_MAINTAIN: usize = 4;

    pub fn from_index(i: usize) -> Self {
        assert!(i < ACTION_COUNT, "action index {i}");
        let lane = [LaneCommand::Left, LaneCommand::Keep, LaneCommand::Right][i / 3];
        let accel = [AccelCommand::Acc, AccelCommand::Maintain, AccelCommand::Dec][i % 3];
        Self { lane, accel }
    }

    pub fn index(self) -> usize {
        let l = match self.lane {
            LaneCommand::Left => 0,
            LaneCommand::Keep => 1,
            LaneCommand::Right => 2,
        };
        let a = match self.accel {
            AccelCommand::Acc => 0,
            AccelCommand::Maintain => 1,
            AccelCommand::Dec => 2,
        };
        l * 3 + a
    }
}

/// Grid cell of one agent: x, y, speed and heading indices.
pub type Cell = [i32; 4];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObservedAgent {
    pub kind: AgentKind,
    pub cell: Cell,
}

/// Discretized physical state of all agents. Exo-agents keep their
/// index; `None` marks an agent that has left the scene.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DrivingObservation {
    pub ego: Cell,
    pub exos: Vec<Option<ObservedAgent>>,
}

pub fn discretize(pos: Vec2, speed: f64, heading: f64) -> Cell {
    [
        (pos.x / POSITION_RESOLUTION).round() as i32,
        (pos.y / POSITION_RESOLUTION).round() as i32,
        (speed / SPEED_RESOLUTION).round() as i32,
        (wrap_angle(heading) / HEADING_RESOLUTION).round() as i32,
    ]
}

/// Cell center as (position, speed, heading).
pub fn cell_center(c: &Cell) -> (Vec2, f64, f64) {
    (
        Vec2::new(c[0] as f64 * POSITION_RESOLUTION, c[1] as f64 * POSITION_RESOLUTION),
        c[2] as f64 * SPEED_RESOLUTION,
        c[3] as f64 * HEADING_RESOLUTION,
    )
}

impl DrivingObservation {
    pub fn of(state: &DrivingState) -> Self {
        Self {
            ego: discretize(state.ego.pos, state.ego.speed, state.ego.heading),
            exos: state
                .exos
                .iter()
                .map(|a| {
                    a.active.then(|| ObservedAgent {
                        kind: a.kind,
                        cell: discretize(a.pos, a.speed, a.heading),
                    })
                })
                .collect(),
        }
    }
}
