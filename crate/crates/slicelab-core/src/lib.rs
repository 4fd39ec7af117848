//! Shared domain types, configuration schema and the seeded random-source
//! abstraction used across the slicelab workspace.

pub mod config;
pub mod error;
pub mod rng;
pub mod types;

pub use config::{
    AgentParams, ChannelConfig, DqnConfig, ExperimentConfig, IndicatorMode, PpoConfig, QtabConfig,
    RewardSpec, SlaPolicy, SliceConfig,
};
pub use error::CoreError;
pub use rng::{RngSource, RngStream};
pub use types::{
    EpochIndex, Observation, SlaSpec, SliceId, SlicingAction, Transition, OBS_DIM,
};
