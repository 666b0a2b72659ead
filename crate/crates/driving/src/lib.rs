//! A desk-scale crowd-driving POMDP: an ego car crossing an uncontrolled
//! intersection among cars and pedestrians whose routes and attention are
//! hidden.

pub mod env;
pub mod features;
pub mod geometry;
pub mod hidden;
pub mod map;
pub mod model;
pub mod state;

pub use env::{write_trajectory_csv, DrivingEnv, TrajectoryRow};
pub use hidden::{belief_from_observation, sample_hidden, HiddenSample};
pub use map::{AgentKind, LaneGraph, MapError};
pub use model::{DefaultPolicy, DrivingConfig, DrivingModel, NEAR_MISS_TTC};
pub use state::{DrivingAction, DrivingObservation, DrivingState, ACTION_COUNT};
