//! Learning agents: modified SAC for the element mask, TD3 for the
//! continuous controls, and their composition.

mod common;
mod msat;
mod replay;
mod sac;
mod td3;
pub mod toy;

pub use msat::{
    msat_train_episode, run_episode, EpisodeMetrics, EpisodeMode, EpisodeTally, MsatAgent, MsatConfig, MsatLosses,
};
pub use replay::{Batch, ReplayBuffer, Transition};
pub use sac::{threshold_mask, SacAgent, SacConfig, SacGrads, SacLosses};
pub use td3::{smooth_target_action, Td3Agent, Td3Config, Td3Grads, Td3Report};
