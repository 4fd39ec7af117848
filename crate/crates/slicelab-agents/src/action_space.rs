use slicelab_core::{ExperimentConfig, SlicingAction};

/// Contiguous PRB grants `[min_prbs, min_prbs + n_actions)` an agent may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSpace {
    pub min_prbs: u32,
    pub n_actions: usize,
}

impl ActionSpace {
    /// Full integer range `[1, C - |I| + 1]` for one controlled slice.
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            min_prbs: 1,
            n_actions: config.max_action_prbs() as usize,
        }
    }

    pub fn action_at(&self, index: usize) -> SlicingAction {
        debug_assert!(index < self.n_actions);
        SlicingAction::from_prbs(self.min_prbs + index as u32)
    }

    pub fn index_of(&self, action: SlicingAction) -> Option<usize> {
        let idx = action.prbs.checked_sub(self.min_prbs)? as usize;
        (idx < self.n_actions).then_some(idx)
    }
}

/// Index of the maximum; ties resolve to the lowest index, i.e. the smallest
/// PRB grant (resource frugality).
pub fn argmax_tie_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
