//! Deterministic packet-level emulator of one base station with multiple
//! slices: CBR traffic, per-TTI PRB scheduling, a bounded random-walk channel
//! and per-packet end-to-end latency.

mod alloc;
mod sim;

pub use alloc::complete_allocation;
pub use sim::{BaseStationSim, EpochReport, PacketRecord, SimError, UeState};
