//! Policy, value and twin-Q multilayer perceptrons for guiding the search,
//! with analytic loss gradients, Adam, entropy-temperature control and
//! text checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod entropy;
pub mod error;
pub mod losses;
pub mod mlp;
pub mod nets;
pub mod provider;

pub use adam::Adam;
pub use checkpoint::Checkpoint;
pub use entropy::{update_alpha, EntropyController, EntropySchedule};
pub use error::{NnError, Result};
pub use losses::{
    loss_sac_policy, loss_sac_q, loss_ssl_policy, loss_ssl_value, soft_target, LossOutput, PolicySample, Transition,
    TwinLossOutput, ValueSample,
};
pub use mlp::{softmax, Mlp};
pub use nets::{
    forward_policy, forward_value, predict_value, recover_value, ApproximatorParams, NetworkConfig, TwinQ, ValueHeads,
    MASK_THRESHOLD,
};
pub use provider::{network_provider, NetworkProvider};
