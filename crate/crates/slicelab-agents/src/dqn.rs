//! Deep Q-network baseline: replay buffer, target network with hard syncs
//! and a linear epsilon-greedy schedule.

use std::path::Path;

use rand::Rng;

use slicelab_core::{DqnConfig, Observation, RngStream, SlicingAction, Transition, OBS_DIM};
use slicelab_rlcore::{Activation, Adam, Checkpoint, DenseNet, NetSpec, RunningNorm};

use crate::action_space::{argmax_tie_lowest, ActionSpace};
use crate::agent::{ActMode, AgentError, SlicingAgent};

/// Fixed-capacity ring buffer with uniform sampling.
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: Vec::with_capacity(capacity.min(1 << 20)),
            capacity: capacity.max(1),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn sample<'a>(&'a self, rng: &mut RngStream, batch: usize) -> Vec<&'a Transition> {
        (0..batch)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

pub struct DqnAgent {
    cfg: DqnConfig,
    space: ActionSpace,
    online: DenseNet,
    target: DenseNet,
    opt: Adam,
    norm: RunningNorm,
    buffer: ReplayBuffer,
    rng: RngStream,
    env_steps: u64,
    grad_steps: u64,
    frozen: bool,
}

impl DqnAgent {
    pub fn new(cfg: DqnConfig, space: ActionSpace, mut rng: RngStream) -> Self {
        let spec = NetSpec::mlp(OBS_DIM, &cfg.hidden, space.n_actions, Activation::Identity);
        let online = DenseNet::init(spec, &mut rng);
        let target = online.clone();
        let opt = Adam::new(online.param_count(), cfg.learning_rate);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity);
        Self {
            cfg,
            space,
            online,
            target,
            opt,
            norm: RunningNorm::new(OBS_DIM),
            buffer,
            rng,
            env_steps: 0,
            grad_steps: 0,
            frozen: false,
        }
    }

    pub fn epsilon(&self) -> f64 {
        if self.frozen {
            return 0.0;
        }
        let frac = (self.env_steps as f64 / self.cfg.epsilon_decay_steps.max(1) as f64).min(1.0);
        1.0 + frac * (self.cfg.epsilon_final - 1.0)
    }

    /// Online-network Q values for an observation (diagnostics).
    pub fn q_values(&self, obs: &Observation) -> Vec<f64> {
        let z = self.norm.normalize(&obs.to_array());
        self.online.forward(&z).expect("online forward")
    }

    /// One TD step on a uniformly sampled batch; hard-syncs the target every
    /// `target_sync_every` gradient steps.
    pub fn train_step(&mut self) -> Result<(), AgentError> {
        if self.buffer.len() < self.cfg.batch_size.max(1) {
            return Err(AgentError::EmptyBatch);
        }
        let batch: Vec<Transition> = self
            .buffer
            .sample(&mut self.rng, self.cfg.batch_size)
            .into_iter()
            .cloned()
            .collect();
        let mut grad = vec![0.0; self.online.param_count()];
        let scale = 1.0 / batch.len() as f64;
        for t in &batch {
            let Some(a_idx) = self.space.index_of(t.action) else {
                continue;
            };
            let z_next = self.norm.normalize(&t.next_state.to_array());
            let next_q = self.target.forward(&z_next)?;
            let max_next = next_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let y = t.reward + self.cfg.gamma * max_next;

            let z = self.norm.normalize(&t.state.to_array());
            let cache = self.online.forward_cached(&z)?;
            let q = cache.output()[a_idx];
            let mut upstream = vec![0.0; self.space.n_actions];
            upstream[a_idx] = 2.0 * (q - y) * scale;
            let g = self.online.backward(&cache, &upstream)?;
            for (acc, gi) in grad.iter_mut().zip(&g) {
                *acc += gi;
            }
        }
        self.opt.step(self.online.params_mut(), &grad);
        self.grad_steps += 1;
        if self.grad_steps % self.cfg.target_sync_every.max(1) as u64 == 0 {
            self.target = self.online.clone();
        }
        Ok(())
    }

    pub fn online_params(&self) -> &[f64] {
        self.online.params()
    }

    pub fn target_params(&self) -> &[f64] {
        self.target.params()
    }

    pub fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn load(
        cfg: DqnConfig,
        space: ActionSpace,
        rng: RngStream,
        path: &Path,
    ) -> Result<Self, AgentError> {
        let ckpt = Checkpoint::load(path)?;
        let online = ckpt.net("online")?;
        let norm_section = ckpt.section("norm")?;
        let norm = RunningNorm::from_flat(OBS_DIM, &norm_section.values).ok_or(
            slicelab_rlcore::CheckpointError::PayloadMismatch {
                section: "norm".into(),
                expected: 1 + 2 * OBS_DIM,
                got: norm_section.values.len(),
            },
        )?;
        let n_actions = online.spec().output_dim();
        let opt = Adam::new(online.param_count(), cfg.learning_rate);
        let buffer = ReplayBuffer::new(cfg.buffer_capacity);
        let target = online.clone();
        Ok(Self {
            cfg,
            space: ActionSpace {
                min_prbs: space.min_prbs,
                n_actions,
            },
            online,
            target,
            opt,
            norm,
            buffer,
            rng,
            env_steps: 0,
            grad_steps: 0,
            frozen: true,
        })
    }
}

impl SlicingAgent for DqnAgent {
    fn kind(&self) -> &'static str {
        "dqn"
    }

    fn action_space(&self) -> ActionSpace {
        self.space
    }

    fn act(&mut self, obs: &Observation, mode: ActMode) -> SlicingAction {
        let explore = matches!(mode, ActMode::Sample)
            && self.rng.gen_range(0.0..1.0) < self.epsilon();
        let index = if explore {
            self.rng.gen_range(0..self.space.n_actions)
        } else {
            argmax_tie_lowest(&self.q_values(obs))
        };
        self.space.action_at(index)
    }

    fn observe(&mut self, t: &Transition) {
        if self.frozen {
            return;
        }
        self.norm.update(&t.state.to_array());
        self.buffer.push(t.clone());
        self.env_steps += 1;
        if self.buffer.len() >= self.cfg.warmup_steps.max(self.cfg.batch_size) {
            let _ = self.train_step();
        }
    }

    fn end_episode(&mut self) {}

    fn action_probs(&self, _obs: &Observation) -> Option<Vec<f64>> {
        None
    }

    fn save(&self, path: &Path) -> Result<(), AgentError> {
        let mut ckpt = Checkpoint::new();
        ckpt.push_net("online", &self.online);
        ckpt.push("norm", format!("{{\"dim\":{OBS_DIM}}}"), self.norm.to_flat());
        ckpt.save(path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use slicelab_core::{EpochIndex, RngSource, SlaSpec};

    fn obs_with(dl: f64) -> Observation {
        let mut o = Observation::empty(SlaSpec::new(50.0, 0.9).unwrap());
        o.dl = dl;
        o
    }

    fn transition(dl: f64, action: u32, reward: f64) -> Transition {
        Transition {
            state: obs_with(dl),
            action: SlicingAction::from_prbs(action),
            reward,
            next_state: obs_with(dl),
            episode: 0,
            epoch: EpochIndex(0),
        }
    }

    #[test]
    fn gamma_zero_regresses_immediate_rewards() {
        let cfg = DqnConfig {
            gamma: 0.0,
            warmup_steps: 8,
            batch_size: 8,
            target_sync_every: 10,
            epsilon_decay_steps: 10,
            ..Default::default()
        };
        let space = ActionSpace {
            min_prbs: 1,
            n_actions: 2,
        };
        let mut agent = DqnAgent::new(cfg, space, RngSource::new(3).substream("dqn-test"));
        // Two (s, a) pairs with fixed rewards 1.0 and 0.25.
        for _ in 0..600 {
            agent.observe(&transition(0.0, 1, 1.0));
            agent.observe(&transition(0.0, 2, 0.25));
        }
        let q = agent.q_values(&obs_with(0.0));
        assert!((q[0] - 1.0).abs() < 5e-2, "Q(a=1) = {}", q[0]);
        assert!((q[1] - 0.25).abs() < 5e-2, "Q(a=2) = {}", q[1]);
    }

    #[test]
    fn target_syncs_exactly_at_interval() {
        let cfg = DqnConfig {
            warmup_steps: 4,
            batch_size: 4,
            target_sync_every: 5,
            ..Default::default()
        };
        let space = ActionSpace {
            min_prbs: 1,
            n_actions: 2,
        };
        let mut agent = DqnAgent::new(cfg, space, RngSource::new(4).substream("dqn-test"));
        for i in 0..20 {
            agent.observe(&transition(i as f64, 1 + (i % 2) as u32, 0.5));
            if agent.grad_steps() > 0 && agent.grad_steps() % 5 == 0 {
                assert_eq!(agent.online_params(), agent.target_params());
            }
        }
        // Between syncs they drift apart.
        assert_ne!(agent.online_params(), agent.target_params());
    }

    #[test]
    fn epsilon_decays_linearly_to_floor() {
        let cfg = DqnConfig {
            epsilon_decay_steps: 100,
            epsilon_final: 0.05,
            warmup_steps: 1_000_000, // never learns, only counts steps
            ..Default::default()
        };
        let space = ActionSpace {
            min_prbs: 1,
            n_actions: 2,
        };
        let mut agent = DqnAgent::new(cfg, space, RngSource::new(5).substream("dqn-test"));
        assert_eq!(agent.epsilon(), 1.0);
        for _ in 0..50 {
            agent.observe(&transition(0.0, 1, 0.0));
        }
        assert!((agent.epsilon() - 0.525).abs() < 1e-12);
        for _ in 0..1000 {
            agent.observe(&transition(0.0, 1, 0.0));
        }
        assert!((agent.epsilon() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn replay_ring_overwrites_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(transition(i as f64, 1, i as f64));
        }
        assert_eq!(buf.len(), 3);
        let rewards: Vec<f64> = buf.items.iter().map(|t| t.reward).collect();
        assert_eq!(rewards, vec![3.0, 4.0, 2.0]);
    }
}
