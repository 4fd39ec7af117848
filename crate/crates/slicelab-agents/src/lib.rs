//! The control agents: PPO, DQN and tabular Q-learning behind one
//! [`SlicingAgent`] trait, registered by name and selected at runtime,
//! plus the reward function, joint-allocation reconciliation and the
//! offline transition sampler.

mod action_space;
mod agent;
mod dqn;
mod joint;
mod offline;
mod ppo;
mod qtab;
mod registry;
mod reward;

pub use action_space::{argmax_tie_lowest, ActionSpace};
pub use agent::{ActMode, AgentContext, AgentError, SlicingAgent};
pub use dqn::{DqnAgent, ReplayBuffer};
pub use joint::reconcile_joint_allocation;
pub use offline::{run_offline_episode, Bucketing, OfflineEnv, TransitionIndex};
pub use ppo::{gae, PpoAgent, RolloutStep};
pub use qtab::QTableAgent;
pub use registry::{build_agent, load_agent, registry, AgentDescriptor};
pub use reward::reward;
