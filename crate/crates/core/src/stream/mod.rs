//! Batch streaming over TCP.

mod client;
pub mod protocol;
mod server;

pub use client::{client_fetch, DecodedBatch, DecodedSample, StreamClient};
pub use protocol::{ErrorCode, PROTOCOL_VERSION};
pub use server::{RunningServer, Server, ServerOptions, ShutdownHandle, StreamSource};
