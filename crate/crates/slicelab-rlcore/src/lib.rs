//! Minimal dense-network substrate for the agents: manual forward/backward,
//! Adam, running feature normalization and a versioned checkpoint format.
//! No autograd graph — only the MLP path the agents need.

mod adam;
mod checkpoint;
mod net;
mod norm;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CheckpointError, Section};
pub use net::{Activation, DenseNet, ForwardCache, NetSpec, RlError};
pub use norm::RunningNorm;
