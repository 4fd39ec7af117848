//! Conditional next-state sampling statistics: uniform over exact-bucket
//! matches, chi-square agreement with the dataset's empirical conditional.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use slicelab_agents::TransitionIndex;
use slicelab_core::{EpochIndex, Observation, RngSource, SlaSpec, SlicingAction, Transition};

fn obs(dl: f64) -> Observation {
    let mut o = Observation::empty(SlaSpec::new(50.0, 0.9).unwrap());
    o.dl = dl;
    o
}

fn transition(dl: f64, action: u32, reward: f64, next_dl: f64) -> Transition {
    Transition {
        state: obs(dl),
        action: SlicingAction::from_prbs(action),
        reward,
        next_state: obs(next_dl),
        episode: 0,
        epoch: EpochIndex(0),
    }
}

#[test]
fn three_matching_rows_draw_uniformly() {
    // Three rows share the same bucketed state and action; their next states
    // identify which one was drawn.
    let rows = vec![
        transition(1.0, 5, 0.1, 10.0),
        transition(1.0, 5, 0.2, 20.0),
        transition(1.0, 5, 0.3, 30.0),
        transition(40.0, 6, 0.4, 40.0),
    ];
    let index = TransitionIndex::from_dataset(rows, 8);
    let mut rng = RngSource::new(17).substream("sampler-uniform");

    const N: usize = 30_000;
    let mut counts = [0usize; 3];
    for _ in 0..N {
        let t = index
            .sample(&obs(1.0), SlicingAction::from_prbs(5), &mut rng)
            .unwrap();
        counts[(t.next_state.dl / 10.0) as usize - 1] += 1;
    }
    let p = 1.0 / 3.0;
    let sigma = (N as f64 * p * (1.0 - p)).sqrt();
    for (i, &c) in counts.iter().enumerate() {
        assert!(
            (c as f64 - N as f64 * p).abs() <= 3.0 * sigma,
            "row {i}: {c} draws vs expected {:.0}",
            N as f64 * p
        );
    }
}

/// Acceptance-grade check: on a 1k-row synthetic dataset the sampler's
/// conditional next-state distribution matches the empirical conditional
/// (chi-square goodness of fit, p > 0.01).
#[test]
fn conditional_distribution_matches_empirical_chi_square() {
    let start = std::time::Instant::now();

    // 1000 rows in one (state bucket, action) cell, next states in three
    // categories with probabilities 0.5 / 0.3 / 0.2.
    let mut rows = Vec::with_capacity(1000);
    for i in 0..1000usize {
        let next_dl = if i < 500 {
            10.0
        } else if i < 800 {
            20.0
        } else {
            30.0
        };
        rows.push(transition(1.0, 5, i as f64, next_dl));
    }
    let index = TransitionIndex::from_dataset(rows, 8);
    let mut rng = RngSource::new(23).substream("sampler-chisq");

    const N: usize = 30_000;
    let mut counts = [0usize; 3];
    for _ in 0..N {
        let t = index
            .sample(&obs(1.0), SlicingAction::from_prbs(5), &mut rng)
            .unwrap();
        counts[(t.next_state.dl / 10.0) as usize - 1] += 1;
    }

    let expected = [0.5 * N as f64, 0.3 * N as f64, 0.2 * N as f64];
    let chi2: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let p_value = 1.0 - ChiSquared::new(2.0).unwrap().cdf(chi2);
    assert!(
        p_value > 0.01,
        "chi2 = {chi2:.3}, p = {p_value:.4}: sampler deviates from the empirical conditional"
    );
    assert!(start.elapsed().as_secs_f64() < 10.0);
}
