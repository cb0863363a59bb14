//! Confidential content distribution over a named-data network.
//!
//! The crate bundles the pieces needed to publish data that only a chosen
//! audience can read:
//!
//! * [`pairing`] generates Barreto-Naehrig curve parameters and exposes the
//!   G1/G2/GT arithmetic (backed by arkworks on the pinned 128-bit curve).
//! * [`abbe`] is a ciphertext-policy attribute-based broadcast KEM: AND-gate
//!   policies over attributes plus an explicit list of revoked users.
//! * [`formats`] reads and writes the JSON configuration, keys and header files.
//! * [`content`] encrypts payloads under the session key (AES-256-GCM).
//! * [`ndn`] is an in-process named-data forwarder (CS, PIT, FIB) with signed,
//!   segmented publish/fetch endpoints and a socket face.
//! * [`rooms`] groups policy-encrypted chat messages into virtual rooms.
//!
//! # Warning
//!
//! This is a research artifact. Nothing here is constant time and nothing
//! has been audited. Do not protect real secrets with it.

pub mod abbe;
pub mod content;
pub mod formats;
pub mod ndn;
pub mod pairing;
pub mod rooms;

pub use abbe::{
    decapsulate, encapsulate, keygen, policy_satisfies, setup, AbbeError, AbbeHeader, AccessPolicy,
    AttributeUniverse, MasterPublicKey, MasterSecretKey, SessionKey, UserPrivateKey, UserRecord,
};
pub use content::{decrypt_object, encrypt_object, ContentError, EncryptedObject};
pub use ndn::{Data, Interest, Name};
pub use pairing::{
    generate_curve, CurveParams, Group, GroupElement, PairingError, Scalar, DEFAULT_CURVE_SEED,
};
