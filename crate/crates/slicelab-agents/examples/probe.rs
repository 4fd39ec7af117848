use slicelab_agents::{ActionSpace, PpoAgent, RolloutStep, SlicingAgent};
use slicelab_core::{Observation, PpoConfig, RngSource, SlaSpec};

fn main() {
    let space = ActionSpace { min_prbs: 1, n_actions: 16 };
    let cfg = PpoConfig {
        gamma: 0.0,
        learning_rate: 1e-2,
        update_epochs: 4,
        minibatch_size: 64,
        entropy_coef: 0.0,
        ..Default::default()
    };
    let mut agent = PpoAgent::new(cfg, space, RngSource::new(42).substream("ppo-clip"));
    let obs = Observation::empty(SlaSpec::new(50.0, 0.9).unwrap());
    let old = agent.action_probs(&obs).unwrap();
    println!("old probs[0..3] = {:?} sum={}", &old[0..3], old.iter().sum::<f64>());

    let mut rollout = Vec::new();
    for i in 0..256 {
        let (a, r) = if i % 2 == 0 { (0, 1.0) } else { (1, 0.0) };
        rollout.push(RolloutStep { obs: obs.to_array(), action_index: a, reward: r, next_obs: obs.to_array() });
    }
    for round in 0..3 {
        agent.update_from_rollout(&rollout).unwrap();
        let new = agent.action_probs(&obs).unwrap();
        println!("after update {}: p0={:.4} (ratio {:.3}), p1={:.4} (ratio {:.3})",
            round + 1, new[0], new[0]/old[0], new[1], new[1]/old[1]);
    }
}
