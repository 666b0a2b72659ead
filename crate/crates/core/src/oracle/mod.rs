//! Enumerable toy domains and brute-force oracles.

mod despot;
pub mod mdp;
pub mod tiger;

pub use despot::{exhaustive_despot_value, OracleResult, NODE_STEP_LIMIT};
pub use mdp::{exact_value_iteration, soft_policy, soft_value_iteration, TabularMdp, ValueIteration};
pub use tiger::{TigerEnv, TigerModel};
