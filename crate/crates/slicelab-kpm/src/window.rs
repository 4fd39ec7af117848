use thiserror::Error;

use slicelab_core::{EpochIndex, Observation, SlaSpec, SliceId};
use slicelab_ransim::EpochReport;

#[derive(Debug, Error)]
pub enum KpmError {
    #[error("negative latency {0} ms: corrupt packet record")]
    NegativeLatency(f64),
}

/// Per-slice KPMs aggregated over one decision epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct KpmWindow {
    pub slice: SliceId,
    pub epoch: EpochIndex,
    pub latencies_ms: Vec<f64>,
    pub tb: u32,
    /// Granted/requested PRB ratio, 1 when nothing was requested.
    pub rt: f64,
    pub dl_mbps: f64,
}

impl KpmWindow {
    /// Assembles a window from RAN-side counters and the latency list, the
    /// same combination the controller performs on E2 + A1 inputs.
    pub fn new(
        slice: SliceId,
        epoch: EpochIndex,
        tb: u32,
        rt: f64,
        dl_mbps: f64,
        latencies_ms: Vec<f64>,
    ) -> Self {
        Self {
            slice,
            epoch,
            latencies_ms,
            tb,
            rt,
            dl_mbps,
        }
    }
}

/// Fraction of packets strictly below the latency bound; 1 for an empty
/// window (no packets means nothing violated).
pub fn conformance_ratio(latencies_ms: &[f64], lambda_ms: f64) -> Result<f64, KpmError> {
    debug_assert!(lambda_ms > 0.0);
    if latencies_ms.is_empty() {
        return Ok(1.0);
    }
    let mut conforming = 0usize;
    for &d in latencies_ms {
        if d < 0.0 {
            return Err(KpmError::NegativeLatency(d));
        }
        if d < lambda_ms {
            conforming += 1;
        }
    }
    Ok(conforming as f64 / latencies_ms.len() as f64)
}

/// Builds a window straight from a simulator report.
pub fn window_from_report(
    report: &EpochReport,
    epoch: EpochIndex,
    epoch_len_ms: u32,
    backhaul_offset_ms: f64,
) -> KpmWindow {
    let latencies: Vec<f64> = report
        .delivered
        .iter()
        .map(|p| p.latency_ms(backhaul_offset_ms))
        .collect();
    let rt = if report.prbs_requested == 0 {
        1.0
    } else {
        (report.prbs_granted as f64 / report.prbs_requested as f64).min(1.0)
    };
    // bits per microsecond == Mbit/s
    let dl_mbps = report.bits_delivered as f64 / (epoch_len_ms as f64 * 1_000.0);
    KpmWindow::new(report.slice, epoch, report.tb_count, rt, dl_mbps, latencies)
}

/// The 9-feature observation for one (window, SLA) pair. Pure; the SLA fields
/// are copied verbatim from the current `sla`.
pub fn build_observation(window: &KpmWindow, sla: SlaSpec) -> Result<Observation, KpmError> {
    let (d_min, d_max, d_mean) = if window.latencies_ms.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &d in &window.latencies_ms {
            lo = lo.min(d);
            hi = hi.max(d);
            sum += d;
        }
        (lo, hi, sum / window.latencies_ms.len() as f64)
    };
    let phi_meas = conformance_ratio(&window.latencies_ms, sla.lambda_ms)?;
    Ok(Observation {
        tb: window.tb,
        rt: window.rt,
        dl: window.dl_mbps,
        d_min_ms: d_min,
        d_max_ms: d_max,
        d_mean_ms: d_mean,
        phi_sla: sla.phi_sla,
        phi_meas,
        lambda_ms: sla.lambda_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_strictly_below_lambda() {
        assert_eq!(
            conformance_ratio(&[10.0, 20.0, 200.0], 110.0).unwrap(),
            2.0 / 3.0
        );
        assert_eq!(conformance_ratio(&[1.0, 2.0, 3.0], 110.0).unwrap(), 1.0);
        // Boundary values do not conform.
        assert_eq!(conformance_ratio(&[50.0, 50.0, 50.0], 50.0).unwrap(), 0.0);
        assert_eq!(conformance_ratio(&[], 50.0).unwrap(), 1.0);
    }

    #[test]
    fn negative_latency_is_rejected() {
        assert!(conformance_ratio(&[-0.1], 50.0).is_err());
    }

    #[test]
    fn observation_latency_stats() {
        let sla = SlaSpec::new(110.0, 0.99).unwrap();
        let w = KpmWindow::new(
            SliceId(0),
            EpochIndex(0),
            5,
            0.8,
            1.2,
            vec![10.0, 20.0, 30.0],
        );
        let obs = build_observation(&w, sla).unwrap();
        assert_eq!(obs.d_min_ms, 10.0);
        assert_eq!(obs.d_max_ms, 30.0);
        assert_eq!(obs.d_mean_ms, 20.0);
        assert_eq!(obs.phi_sla, 0.99);
        assert_eq!(obs.lambda_ms, 110.0);
        assert_eq!(obs.phi_meas, 1.0);
    }

    #[test]
    fn empty_window_is_vacuously_conforming() {
        let sla = SlaSpec::new(50.0, 0.9).unwrap();
        let w = KpmWindow::new(SliceId(1), EpochIndex(3), 0, 1.0, 0.0, vec![]);
        let obs = build_observation(&w, sla).unwrap();
        assert_eq!(obs.d_min_ms, 0.0);
        assert_eq!(obs.d_max_ms, 0.0);
        assert_eq!(obs.d_mean_ms, 0.0);
        assert_eq!(obs.phi_meas, 1.0);
    }
}
