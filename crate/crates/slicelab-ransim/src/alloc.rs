use std::collections::BTreeMap;

use slicelab_core::{SliceId, SlicingAction};

use crate::sim::SimError;

/// Completes a partial allocation: agent-controlled slices keep their grants
/// and the leftover PRBs are split evenly across the uncontrolled slices
/// (lowest indices take the remainder). With no uncontrolled slices the
/// leftover simply stays idle.
pub fn complete_allocation(
    controlled: &BTreeMap<SliceId, SlicingAction>,
    n_slices: usize,
    capacity: u32,
) -> Result<BTreeMap<SliceId, SlicingAction>, SimError> {
    let controlled_total: u32 = controlled.values().map(|a| a.prbs).sum();
    let uncontrolled: Vec<usize> = (0..n_slices)
        .filter(|i| !controlled.contains_key(&SliceId(*i)))
        .collect();

    if controlled_total > capacity {
        return Err(SimError::OverCapacity {
            total: controlled_total,
            capacity,
        });
    }
    let leftover = capacity - controlled_total;
    if (leftover as usize) < uncontrolled.len() {
        return Err(SimError::OverCapacity {
            total: controlled_total + uncontrolled.len() as u32,
            capacity,
        });
    }

    let mut out = controlled.clone();
    if !uncontrolled.is_empty() {
        let share = leftover / uncontrolled.len() as u32;
        let extra = leftover as usize % uncontrolled.len();
        for (pos, &idx) in uncontrolled.iter().enumerate() {
            let prbs = share + u32::from(pos < extra);
            out.insert(SliceId(idx), SlicingAction::from_prbs(prbs));
        }
    }
    Ok(out)
}
