//! Clipped-surrogate PPO with an actor-critic pair of dense networks and
//! generalized advantage estimation.

use std::path::Path;

use rand::Rng;

use slicelab_core::{Observation, PpoConfig, RngStream, SlicingAction, Transition, OBS_DIM};
use slicelab_rlcore::{Activation, Adam, Checkpoint, DenseNet, NetSpec, RunningNorm};

use crate::action_space::{argmax_tie_lowest, ActionSpace};
use crate::agent::{ActMode, AgentError, SlicingAgent};

/// One recorded environment step of the current rollout.
#[derive(Debug, Clone)]
pub struct RolloutStep {
    pub obs: [f64; OBS_DIM],
    pub action_index: usize,
    pub reward: f64,
    pub next_obs: [f64; OBS_DIM],
}

/// Generalized advantage estimation over one trajectory with a bootstrap
/// value for the state after the last step. Returns raw (unnormalized)
/// advantages and the value targets `adv + values`.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    let mut advantages = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next_value = if t + 1 < n { values[t + 1] } else { bootstrap_value };
        let delta = rewards[t] + gamma * next_value - values[t];
        acc = delta + gamma * lambda * acc;
        advantages[t] = acc;
    }
    let returns = advantages
        .iter()
        .zip(values)
        .map(|(a, v)| a + v)
        .collect();
    (advantages, returns)
}

pub struct PpoAgent {
    cfg: PpoConfig,
    space: ActionSpace,
    actor: DenseNet,
    critic: DenseNet,
    actor_opt: Adam,
    critic_opt: Adam,
    norm: RunningNorm,
    rng: RngStream,
    rollout: Vec<RolloutStep>,
}

impl PpoAgent {
    pub fn new(cfg: PpoConfig, space: ActionSpace, mut rng: RngStream) -> Self {
        let actor_spec = NetSpec::mlp(OBS_DIM, &cfg.hidden, space.n_actions, Activation::Softmax);
        let critic_spec = NetSpec::mlp(OBS_DIM, &cfg.hidden, 1, Activation::Identity);
        let actor = DenseNet::init(actor_spec, &mut rng);
        let critic = DenseNet::init(critic_spec, &mut rng);
        let actor_opt = Adam::new(actor.param_count(), cfg.learning_rate);
        let critic_opt = Adam::new(critic.param_count(), cfg.learning_rate);
        Self {
            cfg,
            space,
            actor,
            critic,
            actor_opt,
            critic_opt,
            norm: RunningNorm::new(OBS_DIM),
            rng,
            rollout: Vec::new(),
        }
    }

    fn probs(&self, obs: &Observation) -> Vec<f64> {
        let z = self.norm.normalize(&obs.to_array());
        self.actor.forward(&z).expect("actor forward")
    }

    /// Policy probabilities for a raw (already vectorized) observation.
    fn probs_raw(&self, obs: &[f64; OBS_DIM]) -> Vec<f64> {
        let z = self.norm.normalize(obs);
        self.actor.forward(&z).expect("actor forward")
    }

    fn value_raw(&self, obs: &[f64; OBS_DIM]) -> f64 {
        let z = self.norm.normalize(obs);
        self.critic.forward(&z).expect("critic forward")[0]
    }

    /// The clipped-surrogate update over one collected rollout.
    ///
    /// Advantages come from GAE and are normalized per batch; the actor
    /// minimizes `-mean(min(ratio * A, clip(ratio) * A)) - c_H * entropy`,
    /// the critic a squared error to the returns. The feature normalizer is
    /// frozen while the rollout is consumed and absorbs it afterwards, so
    /// ratios start at exactly 1.
    pub fn update_from_rollout(&mut self, rollout: &[RolloutStep]) -> Result<(), AgentError> {
        if rollout.is_empty() {
            return Err(AgentError::EmptyBatch);
        }
        let n = rollout.len();

        let values: Vec<f64> = rollout.iter().map(|s| self.value_raw(&s.obs)).collect();
        let rewards: Vec<f64> = rollout.iter().map(|s| s.reward).collect();
        let bootstrap = self.value_raw(&rollout[n - 1].next_obs);
        let (mut advantages, returns) =
            gae(&rewards, &values, bootstrap, self.cfg.gamma, self.cfg.gae_lambda);

        if let Some(i) = advantages.iter().position(|a| !a.is_finite()) {
            return Err(AgentError::NonFiniteAdvantage(i));
        }
        let mean = advantages.iter().sum::<f64>() / n as f64;
        let std = (advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64)
            .sqrt()
            .max(1e-8);
        for a in &mut advantages {
            *a = (*a - mean) / std;
        }

        let old_log_probs: Vec<f64> = rollout
            .iter()
            .map(|s| self.probs_raw(&s.obs)[s.action_index].max(1e-12).ln())
            .collect();

        let eps = self.cfg.clip_epsilon;
        let mut indices: Vec<usize> = (0..n).collect();
        for _ in 0..self.cfg.update_epochs {
            // Fisher-Yates on the agent's own stream.
            for i in (1..n).rev() {
                let j = self.rng.gen_range(0..=i);
                indices.swap(i, j);
            }
            for batch in indices.chunks(self.cfg.minibatch_size.max(1)) {
                let mut actor_grad = vec![0.0; self.actor.param_count()];
                let mut critic_grad = vec![0.0; self.critic.param_count()];
                let scale = 1.0 / batch.len() as f64;

                for &i in batch {
                    let step = &rollout[i];
                    let z = self.norm.normalize(&step.obs);

                    let cache = self.actor.forward_cached(&z)?;
                    let probs = cache.output().to_vec();
                    let p_a = probs[step.action_index].max(1e-12);
                    let ratio = (p_a.ln() - old_log_probs[i]).exp();
                    let surr_unclipped = ratio * advantages[i];
                    let surr_clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * advantages[i];
                    // d(-min)/d(log p_a): zero once the clipped branch is active.
                    let coef = if surr_unclipped <= surr_clipped {
                        ratio * advantages[i]
                    } else {
                        0.0
                    };

                    // dL/dp for the softmax output: surrogate + entropy bonus.
                    let mut upstream = vec![0.0; probs.len()];
                    upstream[step.action_index] -= coef / p_a;
                    for (u, &p) in upstream.iter_mut().zip(&probs) {
                        *u += self.cfg.entropy_coef * (p.max(1e-12).ln() + 1.0);
                    }
                    for u in &mut upstream {
                        *u *= scale;
                    }
                    let g = self.actor.backward(&cache, &upstream)?;
                    for (acc, gi) in actor_grad.iter_mut().zip(&g) {
                        *acc += gi;
                    }

                    let vcache = self.critic.forward_cached(&z)?;
                    let v = vcache.output()[0];
                    let vup = [2.0 * self.cfg.value_coef * (v - returns[i]) * scale];
                    let gv = self.critic.backward(&vcache, &vup)?;
                    for (acc, gi) in critic_grad.iter_mut().zip(&gv) {
                        *acc += gi;
                    }
                }
                self.actor_opt.step(self.actor.params_mut(), &actor_grad);
                self.critic_opt.step(self.critic.params_mut(), &critic_grad);
            }
        }

        // Absorb the rollout into the normalizer only after the update.
        for step in rollout {
            self.norm.update(&step.obs);
        }
        Ok(())
    }

    pub fn load(
        cfg: PpoConfig,
        space: ActionSpace,
        rng: RngStream,
        path: &Path,
    ) -> Result<Self, AgentError> {
        let ckpt = Checkpoint::load(path)?;
        let actor = ckpt.net("actor")?;
        let critic = ckpt.net("critic")?;
        let norm_section = ckpt.section("norm")?;
        let norm = RunningNorm::from_flat(OBS_DIM, &norm_section.values).ok_or(
            slicelab_rlcore::CheckpointError::PayloadMismatch {
                section: "norm".into(),
                expected: 1 + 2 * OBS_DIM,
                got: norm_section.values.len(),
            },
        )?;
        let n_actions = actor.spec().output_dim();
        let actor_opt = Adam::new(actor.param_count(), cfg.learning_rate);
        let critic_opt = Adam::new(critic.param_count(), cfg.learning_rate);
        Ok(Self {
            cfg,
            space: ActionSpace {
                min_prbs: space.min_prbs,
                n_actions,
            },
            actor,
            critic,
            actor_opt,
            critic_opt,
            norm,
            rng,
            rollout: Vec::new(),
        })
    }
}

impl SlicingAgent for PpoAgent {
    fn kind(&self) -> &'static str {
        "ppo"
    }

    fn action_space(&self) -> ActionSpace {
        self.space
    }

    fn act(&mut self, obs: &Observation, mode: ActMode) -> SlicingAction {
        let probs = self.probs(obs);
        let index = match mode {
            ActMode::Greedy => argmax_tie_lowest(&probs),
            ActMode::Sample => {
                let u: f64 = self.rng.gen_range(0.0..1.0);
                let mut cum = 0.0;
                let mut chosen = probs.len() - 1;
                for (i, &p) in probs.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        chosen = i;
                        break;
                    }
                }
                chosen
            }
        };
        self.space.action_at(index)
    }

    fn observe(&mut self, t: &Transition) {
        let Some(action_index) = self.space.index_of(t.action) else {
            return;
        };
        self.rollout.push(RolloutStep {
            obs: t.state.to_array(),
            action_index,
            reward: t.reward,
            next_obs: t.next_state.to_array(),
        });
    }

    fn end_episode(&mut self) {
        if self.rollout.is_empty() {
            return;
        }
        let rollout = std::mem::take(&mut self.rollout);
        self.update_from_rollout(&rollout)
            .expect("PPO update on a non-empty rollout");
    }

    fn action_probs(&self, obs: &Observation) -> Option<Vec<f64>> {
        Some(self.probs(obs))
    }

    fn save(&self, path: &Path) -> Result<(), AgentError> {
        let mut ckpt = Checkpoint::new();
        ckpt.push_net("actor", &self.actor);
        ckpt.push_net("critic", &self.critic);
        ckpt.push("norm", format!("{{\"dim\":{OBS_DIM}}}"), self.norm.to_flat());
        ckpt.save(path)?;
        Ok(())
    }
}
