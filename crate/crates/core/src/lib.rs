//! Simulator and meta-RL agents for RSMA downlinks assisted by an active
//! RIS mounted on a UAV.
//!
//! The modules build on each other in this order: [`channel`], [`rsma`],
//! [`power`], [`env`], [`nn`], [`agents`], [`meta`], [`harness`].

pub mod agents;
pub mod channel;
pub mod env;
pub mod error;
pub mod harness;
pub mod meta;
pub mod nn;
pub mod power;
pub mod rsma;
pub mod units;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/system-model.md")]
    struct SystemModel;
    #[doc = include_str!("../../../book/src/power.md")]
    struct Power;
    #[doc = include_str!("../../../book/src/environment.md")]
    struct Environment;
    #[doc = include_str!("../../../book/src/agents.md")]
    struct Agents;
    #[doc = include_str!("../../../book/src/meta-learning.md")]
    struct MetaLearning;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}
