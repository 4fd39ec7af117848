use std::collections::BTreeMap;

use slicelab_core::{SliceId, SlicingAction};

use crate::agent::AgentError;

/// Reconciles simultaneous per-slice grants against the cell budget.
///
/// The budget is the capacity minus one PRB per uncontrolled slice. If the
/// joint request fits it is returned unchanged; otherwise every grant is
/// scaled down proportionally and floored (at least 1 PRB each), then the
/// largest grants shed one PRB at a time until the budget holds.
pub fn reconcile_joint_allocation(
    actions: &BTreeMap<SliceId, SlicingAction>,
    capacity: u32,
    n_slices: usize,
) -> Result<BTreeMap<SliceId, SlicingAction>, AgentError> {
    let n_uncontrolled = n_slices - actions.len();
    let budget = capacity.saturating_sub(n_uncontrolled as u32);
    if (budget as usize) < actions.len() {
        return Err(AgentError::JointOverflow {
            total: actions.len() as u32,
            budget,
        });
    }
    let total: u32 = actions.values().map(|a| a.prbs).sum();
    if total <= budget {
        return Ok(actions.clone());
    }

    let mut scaled: BTreeMap<SliceId, u32> = actions
        .iter()
        .map(|(&sid, a)| {
            let s = (a.prbs as u64 * budget as u64 / total as u64) as u32;
            (sid, s.max(1))
        })
        .collect();
    // Flooring at 1 can still overshoot; shed from the largest grants,
    // lowest slice id first on ties.
    loop {
        let sum: u32 = scaled.values().sum();
        if sum <= budget {
            break;
        }
        let (&victim, _) = scaled
            .iter()
            .filter(|(_, &p)| p > 1)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .expect("budget >= n_controlled guarantees a reducible grant");
        *scaled.get_mut(&victim).expect("victim exists") -= 1;
    }
    Ok(scaled
        .into_iter()
        .map(|(sid, p)| (sid, SlicingAction::from_prbs(p)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(entries: &[(usize, u32)]) -> BTreeMap<SliceId, SlicingAction> {
        entries
            .iter()
            .map(|&(i, p)| (SliceId(i), SlicingAction::from_prbs(p)))
            .collect()
    }

    #[test]
    fn within_budget_is_untouched() {
        let a = m(&[(0, 10), (1, 20)]);
        let out = reconcile_joint_allocation(&a, 50, 2).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn overflow_scales_proportionally() {
        // 40 + 40 against a budget of 50: scaled to 25 + 25.
        let out = reconcile_joint_allocation(&m(&[(0, 40), (1, 40)]), 50, 2).unwrap();
        assert_eq!(out[&SliceId(0)].prbs, 25);
        assert_eq!(out[&SliceId(1)].prbs, 25);
    }

    #[test]
    fn uncontrolled_slices_keep_one_prb_of_headroom() {
        // Budget is 50 - 1 = 49 with one uncontrolled slice.
        let out = reconcile_joint_allocation(&m(&[(0, 40), (1, 40)]), 50, 3).unwrap();
        let total: u32 = out.values().map(|a| a.prbs).sum();
        assert!(total <= 49);
    }

    #[test]
    fn tiny_grants_survive_scaling() {
        let out = reconcile_joint_allocation(&m(&[(0, 1), (1, 1), (2, 100)]), 20, 3).unwrap();
        assert!(out.values().all(|a| a.prbs >= 1));
        assert!(out.values().map(|a| a.prbs).sum::<u32>() <= 20);
        // The big requester absorbs the squeeze.
        assert!(out[&SliceId(2)].prbs >= out[&SliceId(0)].prbs);
    }

    #[test]
    fn impossible_budget_is_an_error() {
        assert!(reconcile_joint_allocation(&m(&[(0, 5), (1, 5), (2, 5)]), 4, 5).is_err());
    }
}
