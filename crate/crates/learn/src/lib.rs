//! The planning-and-learning loop: planner actors record experience into a
//! replay buffer, and a learner fits policy and value priors to it, either
//! by supervision on the planner's decisions or by soft actor-critic on
//! environment rewards.

pub mod actor;
pub mod buffer;
pub mod error;
pub mod eval;
pub mod learner;
pub mod pipeline;
pub mod tuple;

pub use actor::{collect_episode, ActorConfig, ActorMode, EpisodeMetrics, EpisodeRunner, Trajectory};
pub use buffer::{BatchSource, ReplayBuffer, DEFAULT_CAPACITY};
pub use error::{LearnError, Result};
pub use eval::{evaluate_planner, evaluate_policy, EvalSummary, MeanStderr};
pub use guidedplan_nn::recover_value;
pub use learner::{rl_update, ssl_update, Learner, LearnerConfig, RlLearner, SslLearner, UpdateStats};
pub use pipeline::{closed_loop, collect_dataset, open_ssl_pipeline, EpochStats, EvalHook, LoopConfig, LoopOutcome};
pub use tuple::{load_dataset, read_dataset, save_dataset, write_dataset, ExperienceTuple, DATASET_HEADER};
