//! Tabular Q-learning on a uniformly binned observation space.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use slicelab_core::{Observation, QtabConfig, RngStream, SlicingAction, Transition};
use slicelab_rlcore::Checkpoint;

use crate::action_space::{argmax_tie_lowest, ActionSpace};
use crate::agent::{ActMode, AgentError, SlicingAgent};
use crate::offline::Bucketing;

pub struct QTableAgent {
    cfg: QtabConfig,
    space: ActionSpace,
    bucketing: Bucketing,
    table: HashMap<(u64, u32), f64>,
    rng: RngStream,
    env_steps: u64,
    frozen: bool,
}

impl QTableAgent {
    pub fn new(cfg: QtabConfig, space: ActionSpace, rng: RngStream) -> Self {
        let bucketing = Bucketing::default_ranges(cfg.bins);
        Self {
            cfg,
            space,
            bucketing,
            table: HashMap::new(),
            rng,
            env_steps: 0,
            frozen: false,
        }
    }

    fn epsilon(&self) -> f64 {
        if self.frozen {
            return 0.0;
        }
        let frac = (self.env_steps as f64 / self.cfg.epsilon_decay_steps.max(1) as f64).min(1.0);
        1.0 + frac * (self.cfg.epsilon_final - 1.0)
    }

    fn q(&self, key: u64, action_index: usize) -> f64 {
        // Missing entries read as zero.
        *self
            .table
            .get(&(key, action_index as u32))
            .unwrap_or(&0.0)
    }

    fn q_row(&self, key: u64) -> Vec<f64> {
        (0..self.space.n_actions).map(|a| self.q(key, a)).collect()
    }

    /// The tabular update
    /// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`.
    pub fn update(&mut self, t: &Transition) {
        let Some(a_idx) = self.space.index_of(t.action) else {
            return;
        };
        let s = self.bucketing.key(&t.state.to_array());
        let s_next = self.bucketing.key(&t.next_state.to_array());
        let best_next = self
            .q_row(s_next)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let old = self.q(s, a_idx);
        let new = old + self.cfg.alpha * (t.reward + self.cfg.gamma * best_next - old);
        self.table.insert((s, a_idx as u32), new);
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    pub fn q_values(&self, obs: &Observation) -> Vec<f64> {
        self.q_row(self.bucketing.key(&obs.to_array()))
    }

    pub fn load(
        cfg: QtabConfig,
        space: ActionSpace,
        rng: RngStream,
        path: &Path,
    ) -> Result<Self, AgentError> {
        let ckpt = Checkpoint::load(path)?;
        let section = ckpt.section("qtable")?;
        let meta: QtabMeta = serde_json::from_str(&section.meta)
            .map_err(|e| slicelab_rlcore::CheckpointError::BadMeta("qtable".into(), e))?;
        let mut table = HashMap::new();
        for triple in section.values.chunks_exact(3) {
            table.insert((triple[0] as u64, triple[1] as u32), triple[2]);
        }
        Ok(Self {
            cfg,
            space,
            bucketing: meta.bucketing,
            table,
            rng,
            env_steps: 0,
            frozen: true,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct QtabMeta {
    bucketing: Bucketing,
}

impl SlicingAgent for QTableAgent {
    fn kind(&self) -> &'static str {
        "qtab"
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
        self.env_steps += 1;
        self.update(t);
    }

    fn end_episode(&mut self) {}

    fn action_probs(&self, _obs: &Observation) -> Option<Vec<f64>> {
        None
    }

    fn save(&self, path: &Path) -> Result<(), AgentError> {
        let meta = serde_json::to_string(&QtabMeta {
            bucketing: self.bucketing.clone(),
        })
        .expect("bucketing serializes");
        // Sorted triples keep the file deterministic.
        let mut entries: Vec<(u64, u32, f64)> = self
            .table
            .iter()
            .map(|(&(s, a), &v)| (s, a, v))
            .collect();
        entries.sort_unstable_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut values = Vec::with_capacity(entries.len() * 3);
        for (s, a, v) in entries {
            values.push(s as f64);
            values.push(a as f64);
            values.push(v);
        }
        let mut ckpt = Checkpoint::new();
        ckpt.push("qtable", meta, values);
        ckpt.save(path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use slicelab_core::{EpochIndex, RngSource, SlaSpec};

    fn obs(dl: f64) -> Observation {
        let mut o = Observation::empty(SlaSpec::new(50.0, 0.9).unwrap());
        o.dl = dl;
        o
    }

    fn t(dl: f64, action: u32, reward: f64, next_dl: f64) -> Transition {
        Transition {
            state: obs(dl),
            action: SlicingAction::from_prbs(action),
            reward,
            next_state: obs(next_dl),
            episode: 0,
            epoch: EpochIndex(0),
        }
    }

    fn agent(alpha: f64, gamma: f64) -> QTableAgent {
        QTableAgent::new(
            QtabConfig {
                alpha,
                gamma,
                ..Default::default()
            },
            ActionSpace {
                min_prbs: 1,
                n_actions: 4,
            },
            RngSource::new(8).substream("qtab-test"),
        )
    }

    #[test]
    fn zero_alpha_never_changes_the_table() {
        let mut a = agent(0.0, 0.9);
        for _ in 0..10 {
            a.update(&t(0.0, 2, 5.0, 1.0));
        }
        assert!(a.q_values(&obs(0.0)).iter().all(|&q| q == 0.0));
    }

    #[test]
    fn repeated_reward_converges_geometrically() {
        // With gamma = 0 and fixed reward r, after n updates
        // Q = r * (1 - (1-alpha)^n).
        let alpha = 0.25;
        let r = 2.0;
        let mut a = agent(alpha, 0.0);
        for n in 1..=20 {
            a.update(&t(0.0, 1, r, 0.0));
            let expected = r * (1.0 - (1.0 - alpha).powi(n));
            let q = a.q_values(&obs(0.0))[0];
            assert!((q - expected).abs() < 1e-12, "n={n}: {q} vs {expected}");
        }
    }

    #[test]
    fn missing_entries_read_zero() {
        let a = agent(0.1, 0.9);
        assert_eq!(a.q_values(&obs(3.0)), vec![0.0; 4]);
    }
}
