//! Experiment configuration: JSON schema, defaults and validation.
//!
//! One `ExperimentConfig` describes everything a run needs — the cell, the
//! slices with their traffic and SLA policies, reward shaping, agent
//! hyperparameters and the master seed. Serialization round-trips exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::types::SlaSpec;

/// How a slice's SLA evolves over episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlaPolicy {
    /// Same SLA every episode.
    Fixed { lambda_ms: f64, phi_sla: f64 },
    /// A fresh lambda is drawn uniformly from `[lambda_lo_ms, lambda_hi_ms)`
    /// at the start of each episode; phi stays constant.
    UniformLambda {
        lambda_lo_ms: f64,
        lambda_hi_ms: f64,
        phi_sla: f64,
    },
}

impl SlaPolicy {
    pub fn phi_sla(&self) -> f64 {
        match *self {
            SlaPolicy::Fixed { phi_sla, .. } => phi_sla,
            SlaPolicy::UniformLambda { phi_sla, .. } => phi_sla,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        match *self {
            SlaPolicy::Fixed { lambda_ms, phi_sla } => {
                SlaSpec::new(lambda_ms, phi_sla)?;
            }
            SlaPolicy::UniformLambda {
                lambda_lo_ms,
                lambda_hi_ms,
                phi_sla,
            } => {
                SlaSpec::new(lambda_lo_ms, phi_sla)?;
                SlaSpec::new(lambda_hi_ms, phi_sla)?;
                if !(lambda_lo_ms < lambda_hi_ms) {
                    return Err(CoreError::InvalidConfig(format!(
                        "lambda range empty: [{lambda_lo_ms}, {lambda_hi_ms})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Spectral-efficiency random walk of a UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub eff_init: f64,
    pub eff_min: f64,
    pub eff_max: f64,
    /// Per-epoch standard deviation of the walk step.
    pub eff_sigma: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            eff_init: 3.0,
            eff_min: 0.5,
            eff_max: 6.0,
            eff_sigma: 0.1,
        }
    }
}

/// One slice: its UEs, traffic profile, channel and SLA policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    #[serde(default = "default_n_ues")]
    pub n_ues: usize,
    /// Constant bitrate per UE in Mbit/s.
    #[serde(default = "default_ue_bitrate")]
    pub ue_bitrate_mbps: f64,
    #[serde(default = "default_packet_size")]
    pub packet_size_bytes: u32,
    #[serde(default)]
    pub channel: ChannelConfig,
    pub sla: SlaPolicy,
    /// Whether an agent controls this slice's grant. Uncontrolled slices
    /// share the leftover PRBs evenly.
    #[serde(default = "default_true")]
    pub controlled: bool,
}

fn default_n_ues() -> usize {
    2
}
fn default_ue_bitrate() -> f64 {
    1.5
}
fn default_packet_size() -> u32 {
    1500
}
fn default_true() -> bool {
    true
}

/// Reward shaping shared by every agent and by the control loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    /// Sigmoid slope applied to the phi gap.
    pub sigmoid_k: f64,
    pub indicator_mode: IndicatorMode,
}

impl Default for RewardSpec {
    fn default() -> Self {
        Self {
            sigmoid_k: 20.0,
            indicator_mode: IndicatorMode::Corrected,
        }
    }
}

/// Which side of the phi comparison earns the resource-saving bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndicatorMode {
    /// Bonus when `phi_meas <= phi_sla`.
    AsWritten,
    /// Bonus when `phi_meas >= phi_sla` (reward frugality only while the SLA
    /// holds). The default.
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            update_epochs: 4,
            minibatch_size: 32,
            entropy_coef: 0.01,
            value_coef: 0.5,
            learning_rate: 3e-4,
            hidden: vec![64, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Gradient steps between hard target-network syncs.
    pub target_sync_every: usize,
    /// Environment steps over which epsilon decays linearly from 1.0.
    pub epsilon_decay_steps: usize,
    pub epsilon_final: f64,
    /// Steps to fill the buffer before learning starts.
    pub warmup_steps: usize,
    pub hidden: Vec<usize>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 1e-3,
            buffer_capacity: 50_000,
            batch_size: 32,
            target_sync_every: 500,
            epsilon_decay_steps: 10_000,
            epsilon_final: 0.05,
            warmup_steps: 500,
            hidden: vec![64, 64],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QtabConfig {
    pub alpha: f64,
    pub gamma: f64,
    /// Uniform bins per observation feature.
    pub bins: usize,
    pub epsilon_decay_steps: usize,
    pub epsilon_final: f64,
}

impl Default for QtabConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            bins: 8,
            epsilon_decay_steps: 10_000,
            epsilon_final: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentParams {
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub dqn: DqnConfig,
    #[serde(default)]
    pub qtab: QtabConfig,
}

/// Top-level configuration for a simulator/agent run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Cell capacity in PRBs.
    #[serde(default = "default_capacity")]
    pub capacity_prbs: u32,
    /// Decision-epoch length; the simulator ticks 1 ms TTIs inside it.
    #[serde(default = "default_epoch_len")]
    pub epoch_len_ms: u32,
    /// Epochs per episode.
    #[serde(default = "default_episode_epochs")]
    pub episode_epochs: u32,
    /// Fixed backhaul latency added to every delivered packet.
    #[serde(default = "default_backhaul")]
    pub backhaul_offset_ms: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub slices: Vec<SliceConfig>,
    #[serde(default)]
    pub reward: RewardSpec,
    #[serde(default)]
    pub agents: AgentParams,
}

fn default_capacity() -> u32 {
    50
}
fn default_epoch_len() -> u32 {
    250
}
fn default_episode_epochs() -> u32 {
    100
}
fn default_backhaul() -> f64 {
    5.0
}
fn default_seed() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.slices.is_empty() {
            return Err(CoreError::InvalidConfig("no slices configured".into()));
        }
        if self.capacity_prbs < self.slices.len() as u32 {
            return Err(CoreError::InvalidConfig(format!(
                "capacity {} cannot host {} slices with one PRB each",
                self.capacity_prbs,
                self.slices.len()
            )));
        }
        if self.epoch_len_ms == 0 || self.episode_epochs == 0 {
            return Err(CoreError::InvalidConfig(
                "epoch_len_ms and episode_epochs must be positive".into(),
            ));
        }
        if !(self.backhaul_offset_ms >= 0.0) {
            return Err(CoreError::InvalidConfig(format!(
                "backhaul_offset_ms must be >= 0, got {}",
                self.backhaul_offset_ms
            )));
        }
        for (i, s) in self.slices.iter().enumerate() {
            s.sla.validate()?;
            if s.n_ues == 0 {
                return Err(CoreError::InvalidConfig(format!("slice {i} has no UEs")));
            }
            if !(s.ue_bitrate_mbps > 0.0) {
                return Err(CoreError::InvalidConfig(format!(
                    "slice {i}: ue_bitrate_mbps must be > 0"
                )));
            }
            if s.packet_size_bytes == 0 {
                return Err(CoreError::InvalidConfig(format!(
                    "slice {i}: packet_size_bytes must be > 0"
                )));
            }
            let c = &s.channel;
            if !(c.eff_min > 0.0 && c.eff_min <= c.eff_max) {
                return Err(CoreError::InvalidConfig(format!(
                    "slice {i}: efficiency bounds [{}, {}] invalid",
                    c.eff_min, c.eff_max
                )));
            }
            if !(c.eff_init >= c.eff_min && c.eff_init <= c.eff_max) {
                return Err(CoreError::InvalidConfig(format!(
                    "slice {i}: eff_init {} outside [{}, {}]",
                    c.eff_init, c.eff_min, c.eff_max
                )));
            }
            if !(c.eff_sigma >= 0.0) {
                return Err(CoreError::InvalidConfig(format!(
                    "slice {i}: eff_sigma must be >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    /// Indices of agent-controlled slices, ascending.
    pub fn controlled_slices(&self) -> Vec<usize> {
        self.slices
            .iter()
            .enumerate()
            .filter(|(_, s)| s.controlled)
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest valid grant for one controlled slice.
    pub fn max_action_prbs(&self) -> u32 {
        crate::types::SlicingAction::max_prbs(self.capacity_prbs, self.n_slices())
    }

    pub fn to_json(&self) -> Result<String, CoreError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CoreError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CoreError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_file(&self, path: &Path) -> Result<(), CoreError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
