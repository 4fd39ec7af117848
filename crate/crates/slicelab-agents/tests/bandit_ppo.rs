//! PPO sanity: a two-armed bandit with arm rewards 1 and 0 must concentrate
//! on the better arm within 200 updates, every seed.

use slicelab_agents::{ActMode, ActionSpace, PpoAgent, SlicingAgent};
use slicelab_core::{
    EpochIndex, Observation, PpoConfig, RngSource, SlaSpec, SlicingAction, Transition,
};

const ROLLOUT: usize = 64;
const MAX_UPDATES: usize = 200;

fn bandit_config() -> PpoConfig {
    PpoConfig {
        gamma: 0.0, // a bandit has no temporal structure
        learning_rate: 1e-2,
        entropy_coef: 0.005,
        update_epochs: 4,
        minibatch_size: 64,
        ..Default::default()
    }
}

fn bandit_obs() -> Observation {
    Observation::empty(SlaSpec::new(50.0, 0.9).unwrap())
}

/// Returns the number of updates needed to cross 0.95 on the better arm.
fn train_bandit(seed: u64) -> Option<usize> {
    let space = ActionSpace {
        min_prbs: 1,
        n_actions: 2,
    };
    let mut agent = PpoAgent::new(
        bandit_config(),
        space,
        RngSource::new(seed).substream("bandit"),
    );
    let obs = bandit_obs();
    for update in 1..=MAX_UPDATES {
        for step in 0..ROLLOUT {
            let action = agent.act(&obs, ActMode::Sample);
            let reward = if action.prbs == 1 { 1.0 } else { 0.0 };
            agent.observe(&Transition {
                state: obs,
                action,
                reward,
                next_state: obs,
                episode: update as u64,
                epoch: EpochIndex(step as u32),
            });
        }
        agent.end_episode();
        let p_better = agent.action_probs(&obs).expect("ppo exposes probs")[0];
        if p_better > 0.95 {
            return Some(update);
        }
    }
    None
}

#[test]
fn bandit_concentrates_on_better_arm_all_seeds() {
    let start = std::time::Instant::now();
    for seed in 1..=5u64 {
        let solved = train_bandit(seed);
        assert!(
            solved.is_some(),
            "seed {seed} did not reach 0.95 within {MAX_UPDATES} updates"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "bandit took {elapsed:?}");
}

/// Sampling follows the categorical head: with a fresh (near-uniform) policy
/// the empirical draw frequencies match the probabilities within 3 sigma.
#[test]
fn sampling_matches_action_probabilities() {
    let space = ActionSpace {
        min_prbs: 1,
        n_actions: 10,
    };
    let mut agent = PpoAgent::new(
        PpoConfig::default(),
        space,
        RngSource::new(77).substream("bandit-sample"),
    );
    let obs = bandit_obs();
    let probs = agent.action_probs(&obs).unwrap();

    const N: usize = 100_000;
    let mut counts = vec![0usize; 10];
    for _ in 0..N {
        let a = agent.act(&obs, ActMode::Sample);
        counts[(a.prbs - 1) as usize] += 1;
    }
    for (i, &c) in counts.iter().enumerate() {
        let expected = probs[i] * N as f64;
        let sigma = (N as f64 * probs[i] * (1.0 - probs[i])).sqrt();
        assert!(
            (c as f64 - expected).abs() <= 3.0 * sigma,
            "action {i}: {c} draws vs expected {expected:.0} (sigma {sigma:.1})"
        );
    }
}

/// Greedy mode resolves exact ties toward the smaller grant.
#[test]
fn greedy_tie_breaks_to_fewest_prbs() {
    use slicelab_agents::argmax_tie_lowest;
    // Logits tied between actions 8 and 20 (indices 7 and 19).
    let mut values = vec![0.0; 30];
    values[7] = 2.5;
    values[19] = 2.5;
    assert_eq!(argmax_tie_lowest(&values), 7);
}
