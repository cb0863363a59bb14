//! In-process named-data forwarding plane.
//!
//! A single [`Forwarder`] thread owns the content store, pending interest
//! table and FIB. [`Producer`] and [`Consumer`] endpoints attach through
//! [`Face`]s, either in-process or over TCP ([`Forwarder::listen_tcp`],
//! [`Face::connect_tcp`]).
//!
//! Matching is exact on the full name, segment suffix included. Interests
//! and Data carry no face or host identifiers.

mod endpoint;
pub mod forwarder;
mod name;
mod packet;
mod runtime;
mod socket;
pub mod wire;

use thiserror::Error;

pub use endpoint::{Consumer, FetchConfig, Producer, DEFAULT_CHUNK_SIZE, DEFAULT_WINDOW, MAX_CHUNK_SIZE};
pub use forwarder::{
    FaceId, ForwarderState, ForwarderStats, Nack, NackReason, Packet, CS_CAPACITY_ENV, DEFAULT_CS_CAPACITY,
    PIT_LIFETIME,
};
pub use name::{Name, NameError};
pub use packet::{signed_digest, Data, DataSigner, DataVerifier, Ed25519Signer, Interest, TrustStore, SIGNATURE_LEN};
pub use runtime::{Face, Forwarder};
pub use socket::SocketListener;
pub use ed25519_dalek::VerifyingKey;

#[derive(Debug, Error)]
pub enum NdnError {
    #[error("no registered prefix covers {0}")]
    PrefixNotRegistered(Name),
    #[error("chunk size {0} is outside 1..=65536")]
    InvalidChunkSize(usize),
    #[error("payload would need {0} segments")]
    TooManySegments(u64),
    #[error("invalid name for this operation: {0}")]
    InvalidName(Name),
    #[error("timed out waiting for {0}")]
    Timeout(Name),
    #[error("signature check failed for {0}")]
    SignatureInvalid(Name),
    #[error("no route to {0}")]
    NoRoute(Name),
    #[error("inconsistent segments: {0}")]
    Inconsistent(String),
    #[error("face disconnected")]
    Disconnected,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
