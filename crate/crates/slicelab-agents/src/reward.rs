use slicelab_core::{IndicatorMode, SlicingAction};

use crate::agent::AgentError;

/// Per-epoch reward: a sigmoid of the phi gap plus a resource-saving bonus.
///
/// The sigmoid term is `1 / (1 + exp(k * (phi_sla - phi_meas)))`; the bonus
/// `1 - a/C` is granted when the indicator fires. `AsWritten` fires on
/// `phi_meas <= phi_sla`, `Corrected` (the default elsewhere) on
/// `phi_meas >= phi_sla`, paying frugality only while the SLA holds.
pub fn reward(
    phi_sla: f64,
    phi_meas: f64,
    action: SlicingAction,
    capacity: u32,
    k: f64,
    mode: IndicatorMode,
) -> Result<f64, AgentError> {
    if action.prbs > capacity {
        return Err(AgentError::ActionExceedsCapacity {
            prbs: action.prbs,
            capacity,
        });
    }
    let sigmoid = 1.0 / (1.0 + (k * (phi_sla - phi_meas)).exp());
    let fires = match mode {
        IndicatorMode::AsWritten => phi_meas <= phi_sla,
        IndicatorMode::Corrected => phi_meas >= phi_sla,
    };
    let bonus = if fires {
        1.0 - action.prbs as f64 / capacity as f64
    } else {
        0.0
    };
    Ok(sigmoid + bonus)
}
