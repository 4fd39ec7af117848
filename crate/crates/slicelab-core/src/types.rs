//! Domain types shared by the simulator, the KPM pipeline and the agents.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;

/// Number of features in an [`Observation`]. The order is fixed and load-bearing:
/// dataset columns, network inputs and the wire schema all follow it.
pub const OBS_DIM: usize = 9;

/// Identifier of a network slice within one base station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SliceId(pub usize);

impl std::fmt::Display for SliceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Decision-epoch index within an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpochIndex(pub u32);

impl std::fmt::Display for EpochIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-slice SLA: maximum tolerable end-to-end latency and the required
/// fraction of packets that must stay below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlaSpec {
    pub lambda_ms: f64,
    pub phi_sla: f64,
}

impl SlaSpec {
    pub fn new(lambda_ms: f64, phi_sla: f64) -> Result<Self, CoreError> {
        if !(lambda_ms > 0.0) || !lambda_ms.is_finite() {
            return Err(CoreError::InvalidLambda(lambda_ms));
        }
        if !(phi_sla > 0.0 && phi_sla <= 1.0) {
            return Err(CoreError::InvalidPhi(phi_sla));
        }
        Ok(Self { lambda_ms, phi_sla })
    }
}

/// PRB grant for the controlled slice during one decision epoch.
///
/// Valid grants leave at least one PRB for every other slice:
/// `1 <= prbs <= capacity - (n_slices - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlicingAction {
    pub prbs: u32,
}

impl SlicingAction {
    pub fn new(prbs: u32, capacity: u32, n_slices: usize) -> Result<Self, CoreError> {
        let max = Self::max_prbs(capacity, n_slices);
        if prbs < 1 || prbs > max {
            return Err(CoreError::InvalidAction {
                prbs,
                max,
                capacity,
                slices: n_slices,
            });
        }
        Ok(Self { prbs })
    }

    /// Largest grant that still leaves one PRB for every other slice.
    pub fn max_prbs(capacity: u32, n_slices: usize) -> u32 {
        capacity.saturating_sub(n_slices.saturating_sub(1) as u32).max(1)
    }

    /// Unvalidated constructor for contexts that enforce bounds themselves.
    pub fn from_prbs(prbs: u32) -> Self {
        Self { prbs }
    }
}

/// The 9-feature observation fed to the agents, aggregated over one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Transport blocks transmitted in the window.
    pub tb: u32,
    /// Ratio of PRBs granted over PRBs requested, clamped to [0, 1].
    pub rt: f64,
    /// Downlink rate in Mbit/s.
    pub dl: f64,
    pub d_min_ms: f64,
    pub d_max_ms: f64,
    pub d_mean_ms: f64,
    pub phi_sla: f64,
    pub phi_meas: f64,
    pub lambda_ms: f64,
}

impl Observation {
    /// Feature vector in the fixed order
    /// `[tb, rt, dl, d_min, d_max, d_mean, phi_sla, phi_meas, lambda]`.
    pub fn to_array(&self) -> [f64; OBS_DIM] {
        [
            self.tb as f64,
            self.rt,
            self.dl,
            self.d_min_ms,
            self.d_max_ms,
            self.d_mean_ms,
            self.phi_sla,
            self.phi_meas,
            self.lambda_ms,
        ]
    }

    /// Zeroed observation carrying the given SLA; the empty-window shape.
    pub fn empty(sla: SlaSpec) -> Self {
        Self {
            tb: 0,
            rt: 1.0,
            dl: 0.0,
            d_min_ms: 0.0,
            d_max_ms: 0.0,
            d_mean_ms: 0.0,
            phi_sla: sla.phi_sla,
            phi_meas: 1.0,
            lambda_ms: sla.lambda_ms,
        }
    }
}

/// One offline-training tuple with episode/epoch provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Observation,
    pub action: SlicingAction,
    pub reward: f64,
    pub next_state: Observation,
    pub episode: u64,
    pub epoch: EpochIndex,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sla_rejects_out_of_domain_values() {
        assert!(SlaSpec::new(110.0, 0.99).is_ok());
        assert!(SlaSpec::new(0.0, 0.99).is_err());
        assert!(SlaSpec::new(-5.0, 0.99).is_err());
        assert!(SlaSpec::new(50.0, 0.0).is_err());
        assert!(SlaSpec::new(50.0, 1.0001).is_err());
        assert!(SlaSpec::new(f64::NAN, 0.9).is_err());
    }

    #[test]
    fn action_bounds_leave_one_prb_per_other_slice() {
        // C = 50, two slices: valid range is [1, 49].
        assert!(SlicingAction::new(0, 50, 2).is_err());
        assert!(SlicingAction::new(1, 50, 2).is_ok());
        assert!(SlicingAction::new(49, 50, 2).is_ok());
        assert!(SlicingAction::new(50, 50, 2).is_err());
        // Single slice may take the whole cell.
        assert!(SlicingAction::new(50, 50, 1).is_ok());
    }

    #[test]
    fn observation_vector_is_length_nine_in_fixed_order() {
        let obs = Observation {
            tb: 7,
            rt: 0.5,
            dl: 1.25,
            d_min_ms: 1.0,
            d_max_ms: 3.0,
            d_mean_ms: 2.0,
            phi_sla: 0.99,
            phi_meas: 0.97,
            lambda_ms: 110.0,
        };
        let v = obs.to_array();
        assert_eq!(v.len(), OBS_DIM);
        assert_eq!(
            v,
            [7.0, 0.5, 1.25, 1.0, 3.0, 2.0, 0.99, 0.97, 110.0]
        );
    }
}
