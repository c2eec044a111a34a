//! Multi-device synchronization through a star-topology coordinator.
//!
//! Devices number their messages per stream; the coordinator applies each
//! stream exactly once and in order, fans progress out to the other members,
//! relays opaque commands and releases barriers once every member reached
//! them. Lost frames are recovered by retransmission in both directions.

mod client;
mod coordinator;
mod message;
pub mod sim;

pub use client::{ReceivedCommand, SyncClient};
pub use coordinator::{coordinator_step, Barrier, GroupState, Outbound, Progress, ProgressView, COORDINATOR};
pub use message::{decode_message, encode_message, fields, pack, unpack, MessageKind, SyncError, SyncMessage, MAGIC};
