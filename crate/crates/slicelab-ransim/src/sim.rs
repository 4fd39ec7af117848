use std::collections::{BTreeMap, VecDeque};

use rand_distr::{Distribution, Normal};
use thiserror::Error;

use slicelab_core::{ExperimentConfig, RngStream, SliceId, SlicingAction};

/// Bits one PRB carries in one 1 ms TTI, per unit of spectral efficiency.
const BITS_PER_PRB_PER_EFF: f64 = 200.0;
const TTI_US: u64 = 1_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("allocation covers {got} slices, simulator has {expected}")]
    IncompleteAllocation { got: usize, expected: usize },
    #[error("allocation of {total} PRBs exceeds cell capacity {capacity}")]
    OverCapacity { total: u32, capacity: u32 },
    #[error("slice {0} granted zero PRBs")]
    ZeroGrant(SliceId),
}

/// One delivered packet. Latency is queueing + transmission inside the cell
/// plus a fixed backhaul offset added by [`PacketRecord::latency_ms`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub slice: SliceId,
    pub arrival_us: u64,
    pub departure_us: u64,
    pub size_bits: u64,
}

impl PacketRecord {
    pub fn latency_ms(&self, backhaul_offset_ms: f64) -> f64 {
        (self.departure_us - self.arrival_us) as f64 / 1_000.0 + backhaul_offset_ms
    }
}

/// Per-slice aggregate of one simulated epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub slice: SliceId,
    pub delivered: Vec<PacketRecord>,
    /// Transport blocks: one per (UE, TTI) with at least one bit sent.
    pub tb_count: u32,
    /// Sum over TTIs of the slice's PRB demand, capped at cell capacity.
    pub prbs_requested: u64,
    /// Sum over TTIs of the PRBs granted to the slice.
    pub prbs_granted: u64,
    pub bits_delivered: u64,
    /// Granted PRBs that went unused; nonzero only with empty queues.
    pub idle_prbs: u64,
}

#[derive(Debug, Clone, Copy)]
struct Packet {
    arrival_us: u64,
    size_bits: u64,
    remaining_bits: u64,
}

/// One UE: CBR traffic source, its FIFO queue and its channel quality.
#[derive(Debug, Clone)]
pub struct UeState {
    pub slice: SliceId,
    pub bitrate_mbps: f64,
    pub efficiency: f64,
    queue: VecDeque<Packet>,
    /// Bits per packet for this UE's flow.
    packet_bits: u64,
    /// Deterministic arrival phase within the inter-arrival period.
    phase_us: f64,
    interarrival_us: f64,
    packets_emitted: u64,
}

impl UeState {
    /// A CBR source emits a packet each time it has accumulated one packet's
    /// worth of bits, so packet k completes at phase + (k+1) periods.
    fn next_arrival_us(&self) -> f64 {
        self.phase_us + (self.packets_emitted + 1) as f64 * self.interarrival_us
    }

    fn queued_bits_remaining(&self) -> u64 {
        self.queue.iter().map(|p| p.remaining_bits).sum()
    }

    fn queued_bits_full(&self) -> u64 {
        self.queue.iter().map(|p| p.size_bits).sum()
    }
}

struct SliceState {
    ues: Vec<usize>, // indices into the UE arena
    eff_min: f64,
    eff_max: f64,
    eff_sigma: f64,
    bits_generated: u64,
    bits_delivered: u64,
}

/// Packet-level simulator of one cell. Single-owner and single-threaded;
/// run independent instances in parallel for multi-seed experiments.
pub struct BaseStationSim {
    capacity: u32,
    epoch_len_ms: u32,
    ues: Vec<UeState>,
    slices: Vec<SliceState>,
    now_us: u64,
    tti_index: u64,
    rng: RngStream,
}

impl BaseStationSim {
    /// Builds the cell described by `config`. `rng` drives channel evolution
    /// only; traffic is deterministic.
    pub fn new(config: &ExperimentConfig, rng: RngStream) -> Self {
        let mut ues = Vec::new();
        let mut slices = Vec::new();
        for (slice_idx, sc) in config.slices.iter().enumerate() {
            let mut ue_ids = Vec::with_capacity(sc.n_ues);
            let packet_bits = sc.packet_size_bytes as u64 * 8;
            // 1 Mbit/s == 1 bit/us, so the inter-arrival in us is bits/rate.
            let interarrival_us = packet_bits as f64 / sc.ue_bitrate_mbps;
            for k in 0..sc.n_ues {
                ue_ids.push(ues.len());
                ues.push(UeState {
                    slice: SliceId(slice_idx),
                    bitrate_mbps: sc.ue_bitrate_mbps,
                    efficiency: sc.channel.eff_init,
                    queue: VecDeque::new(),
                    packet_bits,
                    // Spread UEs across the period so arrivals interleave.
                    phase_us: interarrival_us * k as f64 / sc.n_ues as f64,
                    interarrival_us,
                    packets_emitted: 0,
                });
            }
            slices.push(SliceState {
                ues: ue_ids,
                eff_min: sc.channel.eff_min,
                eff_max: sc.channel.eff_max,
                eff_sigma: sc.channel.eff_sigma,
                bits_generated: 0,
                bits_delivered: 0,
            });
        }
        Self {
            capacity: config.capacity_prbs,
            epoch_len_ms: config.epoch_len_ms,
            ues,
            slices,
            now_us: 0,
            tti_index: 0,
            rng,
        }
    }

    pub fn now_us(&self) -> u64 {
        self.now_us
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Cumulative bits generated by the slice's sources.
    pub fn bits_generated(&self, slice: SliceId) -> u64 {
        self.slices[slice.0].bits_generated
    }

    /// Cumulative bits of fully delivered packets.
    pub fn bits_delivered(&self, slice: SliceId) -> u64 {
        self.slices[slice.0].bits_delivered
    }

    /// Bits currently queued, counting partially transmitted packets at
    /// their full size (a packet counts until it is fully delivered).
    pub fn bits_queued(&self, slice: SliceId) -> u64 {
        self.slices[slice.0]
            .ues
            .iter()
            .map(|&u| self.ues[u].queued_bits_full())
            .sum()
    }

    pub fn efficiencies(&self, slice: SliceId) -> Vec<f64> {
        self.slices[slice.0]
            .ues
            .iter()
            .map(|&u| self.ues[u].efficiency)
            .collect()
    }

    /// One bounded random-walk step of every UE's spectral efficiency.
    /// Called once per epoch by [`step_epoch`]; public so the walk can be
    /// driven directly in statistical tests.
    ///
    /// [`step_epoch`]: BaseStationSim::step_epoch
    pub fn evolve_channel(&mut self) {
        for s in 0..self.slices.len() {
            let (lo, hi, sigma) = {
                let sl = &self.slices[s];
                (sl.eff_min, sl.eff_max, sl.eff_sigma)
            };
            let normal = Normal::new(0.0, sigma).expect("sigma validated non-negative");
            let ue_ids = self.slices[s].ues.clone();
            for u in ue_ids {
                // Always draw, so the stream stays aligned even at sigma = 0.
                let step: f64 = normal.sample(&mut self.rng);
                let ue = &mut self.ues[u];
                ue.efficiency = (ue.efficiency + step).clamp(lo, hi);
            }
        }
    }

    fn validate_allocation(
        &self,
        slicing: &BTreeMap<SliceId, SlicingAction>,
    ) -> Result<(), SimError> {
        if slicing.len() != self.slices.len()
            || !(0..self.slices.len()).all(|i| slicing.contains_key(&SliceId(i)))
        {
            return Err(SimError::IncompleteAllocation {
                got: slicing.len(),
                expected: self.slices.len(),
            });
        }
        let mut total = 0u32;
        for (&sid, action) in slicing {
            if action.prbs == 0 {
                return Err(SimError::ZeroGrant(sid));
            }
            total += action.prbs;
        }
        if total > self.capacity {
            return Err(SimError::OverCapacity {
                total,
                capacity: self.capacity,
            });
        }
        Ok(())
    }

    /// Simulates one decision epoch under the given per-slice PRB grants.
    ///
    /// Evolves the channel once, then ticks `epoch_len_ms` 1 ms TTIs. Each
    /// TTI a slice's PRBs are handed out one at a time, cycling over its UEs
    /// with pending data starting from `tti % n_ues`. Fully drained packets
    /// get a departure stamp at the end of the TTI.
    pub fn step_epoch(
        &mut self,
        slicing: &BTreeMap<SliceId, SlicingAction>,
    ) -> Result<BTreeMap<SliceId, EpochReport>, SimError> {
        self.validate_allocation(slicing)?;
        self.evolve_channel();

        let n_ttis = self.epoch_len_ms as u64;
        let mut reports: Vec<EpochReport> = (0..self.slices.len())
            .map(|i| EpochReport {
                slice: SliceId(i),
                delivered: Vec::new(),
                tb_count: 0,
                prbs_requested: 0,
                prbs_granted: 0,
                bits_delivered: 0,
                idle_prbs: 0,
            })
            .collect();

        for _ in 0..n_ttis {
            let tti_start = self.now_us;
            let tti_end = tti_start + TTI_US;

            // Admit this TTI's arrivals before serving.
            for s in 0..self.slices.len() {
                let ue_ids = self.slices[s].ues.clone();
                for u in ue_ids {
                    let ue = &mut self.ues[u];
                    let mut generated = 0u64;
                    while (ue.next_arrival_us() as u64) < tti_end {
                        let arrival_us = ue.next_arrival_us() as u64;
                        ue.queue.push_back(Packet {
                            arrival_us,
                            size_bits: ue.packet_bits,
                            remaining_bits: ue.packet_bits,
                        });
                        ue.packets_emitted += 1;
                        generated += ue.packet_bits;
                    }
                    self.slices[s].bits_generated += generated;
                }
            }

            for s in 0..self.slices.len() {
                let grant = slicing[&SliceId(s)].prbs;
                let report = &mut reports[s];
                report.prbs_granted += grant as u64;
                report.prbs_requested += self.slice_demand_prbs(s).min(self.capacity as u64);
                self.serve_slice_tti(s, grant, tti_end, report);
            }

            self.now_us = tti_end;
            self.tti_index += 1;
        }
        Ok(reports
            .into_iter()
            .map(|r| (r.slice, r))
            .collect::<BTreeMap<_, _>>())
    }

    /// PRBs the slice would need this TTI to drain its entire backlog.
    fn slice_demand_prbs(&self, slice: usize) -> u64 {
        self.slices[slice]
            .ues
            .iter()
            .map(|&u| {
                let ue = &self.ues[u];
                let backlog = ue.queued_bits_remaining();
                if backlog == 0 {
                    0
                } else {
                    backlog.div_ceil(per_prb_bits(ue.efficiency))
                }
            })
            .sum()
    }

    fn serve_slice_tti(&mut self, slice: usize, grant: u32, tti_end: u64, report: &mut EpochReport) {
        let ue_ids = self.slices[slice].ues.clone();
        let n = ue_ids.len();
        let mut sent_this_tti = vec![false; n];
        let mut cursor = (self.tti_index % n as u64) as usize;
        let mut budget = grant;

        'prbs: while budget > 0 {
            // Next UE with pending data, cycling from the cursor.
            let mut chosen = None;
            for k in 0..n {
                let pos = (cursor + k) % n;
                if !self.ues[ue_ids[pos]].queue.is_empty() {
                    chosen = Some(pos);
                    break;
                }
            }
            let Some(pos) = chosen else {
                report.idle_prbs += budget as u64;
                break 'prbs;
            };
            let u = ue_ids[pos];
            let mut bits = per_prb_bits(self.ues[u].efficiency);
            let mut transmitted = false;
            while bits > 0 {
                let Some(head) = self.ues[u].queue.front_mut() else {
                    break;
                };
                transmitted = true;
                if head.remaining_bits > bits {
                    head.remaining_bits -= bits;
                    bits = 0;
                } else {
                    bits -= head.remaining_bits;
                    let done = self.ues[u].queue.pop_front().expect("front exists");
                    report.delivered.push(PacketRecord {
                        slice: SliceId(slice),
                        arrival_us: done.arrival_us,
                        departure_us: tti_end,
                        size_bits: done.size_bits,
                    });
                    report.bits_delivered += done.size_bits;
                    self.slices[slice].bits_delivered += done.size_bits;
                }
            }
            if transmitted && !sent_this_tti[pos] {
                sent_this_tti[pos] = true;
                report.tb_count += 1;
            }
            budget -= 1;
            cursor = (pos + 1) % n;
        }
    }
}

fn per_prb_bits(efficiency: f64) -> u64 {
    (BITS_PER_PRB_PER_EFF * efficiency).floor() as u64
}
