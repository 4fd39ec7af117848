use std::path::Path;

use thiserror::Error;

use slicelab_core::{AgentParams, Observation, RngStream, SlicingAction, Transition};
use slicelab_rlcore::{CheckpointError, RlError};

use crate::action_space::ActionSpace;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("action of {prbs} PRBs exceeds capacity {capacity}")]
    ActionExceedsCapacity { prbs: u32, capacity: u32 },
    #[error("unknown agent kind '{0}'")]
    UnknownAgent(String),
    #[error("agent '{kind}' needs an argument, e.g. '{kind}:12'")]
    MissingArgument { kind: String },
    #[error("bad agent argument '{arg}': {message}")]
    BadArgument { arg: String, message: String },
    #[error("agent '{0}' has no loadable checkpoint form")]
    NotLoadable(String),
    #[error("dataset contains no row with action {0}")]
    NoSuchAction(u32),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite advantage at sample {0}")]
    NonFiniteAdvantage(usize),
    #[error("joint allocation of {total} PRBs cannot fit budget {budget}")]
    JointOverflow { total: u32, budget: u32 },
    #[error("checkpoint error: {0}")]
    Checkpoint(#[from] CheckpointError),
    #[error("network error: {0}")]
    Net(#[from] RlError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    /// Draw from the behavior policy (training).
    Sample,
    /// Deterministic argmax, ties to the smallest grant (evaluation).
    Greedy,
}

/// Everything a factory needs to assemble an agent for one controlled slice.
#[derive(Clone)]
pub struct AgentContext {
    pub params: AgentParams,
    pub action_space: ActionSpace,
    pub rng: RngStream,
}

/// One slicing strategy. All variants are interchangeable behind this trait;
/// the registry maps names to factories.
pub trait SlicingAgent {
    fn kind(&self) -> &'static str;

    fn action_space(&self) -> ActionSpace;

    /// Chooses a grant for the current observation.
    fn act(&mut self, obs: &Observation, mode: ActMode) -> SlicingAction;

    /// Feeds one environment transition (training hook; no-op for frozen or
    /// trivial policies).
    fn observe(&mut self, transition: &Transition);

    /// Episode boundary; agents that update per rollout flush here.
    fn end_episode(&mut self);

    /// Policy distribution over the action space at `obs`, when the policy
    /// has one (diagnostics and tests).
    fn action_probs(&self, obs: &Observation) -> Option<Vec<f64>>;

    fn save(&self, path: &Path) -> Result<(), AgentError>;
}
