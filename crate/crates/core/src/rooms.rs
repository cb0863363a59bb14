//! Virtual chatrooms: messages encrypted under an access policy and grouped
//! by that policy.
//!
//! Every message gets a fresh session key. A message belongs to the room
//! identified by the SHA-256 of its normalized policy, so posting under an
//! equal policy always lands in the same room, and changing membership
//! means posting under a new policy. Envelopes travel as named-data objects
//! under `/chat/<sender>/<seq>`.
//!
//! `sender_id` is bound into the AEAD associated data but is not signed by
//! the sender; only the transport-level Data signature vouches for it.

use std::fmt;
use std::time::{SystemTime, UNIX_EPOCH};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use rand::{CryptoRng, RngCore};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::abbe::{decapsulate, encapsulate, AbbeError, AbbeHeader, AccessPolicy, MasterPublicKey, UserPrivateKey};
use crate::content::{self, ContentError, NONCE_LEN, TAG_LEN};
use crate::formats::{policy_canonical_bytes, to_canonical_string, FormatError, HeaderFile};
use crate::ndn::{Consumer, Name, NdnError, Producer, DEFAULT_CHUNK_SIZE};

const ENVELOPE_DOMAIN: &[u8] = b"abbe-room-envelope-v1";

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoomId(pub [u8; 32]);

impl fmt::Display for RoomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for RoomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RoomId({})", &hex::encode(self.0)[..12])
    }
}

/// SHA-256 of the canonical policy JSON. Attribute and revocation order
/// does not matter.
pub fn room_id(policy: &AccessPolicy) -> RoomId {
    RoomId(Sha256::digest(policy_canonical_bytes(policy)).into())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageEnvelope {
    pub header: AbbeHeader,
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
    pub sender_id: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Received {
    Delivered { room: RoomId, plaintext: Vec<u8> },
    NotRecipient,
}

#[derive(Debug, Error)]
pub enum RoomError {
    #[error("message failed authentication")]
    AuthFailure,
    #[error(transparent)]
    Abbe(#[from] AbbeError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Ndn(#[from] NdnError),
}

fn header_json(header: &AbbeHeader) -> String {
    to_canonical_string(&HeaderFile::new(header.clone()).to_json())
}

fn associated_data(header: &AbbeHeader, sender_id: &str, timestamp: u64) -> Vec<u8> {
    let mut aad = Vec::with_capacity(ENVELOPE_DOMAIN.len() + 32 + 8 + 8 + sender_id.len());
    aad.extend_from_slice(ENVELOPE_DOMAIN);
    aad.extend_from_slice(&Sha256::digest(header_json(header)));
    aad.extend_from_slice(&(sender_id.len() as u64).to_be_bytes());
    aad.extend_from_slice(sender_id.as_bytes());
    aad.extend_from_slice(&timestamp.to_be_bytes());
    aad
}

pub fn post_message<R: RngCore + CryptoRng>(
    mpk: &MasterPublicKey,
    policy: &AccessPolicy,
    sender_id: &str,
    plaintext: &[u8],
    rng: &mut R,
) -> Result<MessageEnvelope, AbbeError> {
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
    post_message_at(mpk, policy, sender_id, plaintext, now, rng)
}

pub fn post_message_at<R: RngCore + CryptoRng>(
    mpk: &MasterPublicKey,
    policy: &AccessPolicy,
    sender_id: &str,
    plaintext: &[u8],
    timestamp: u64,
    rng: &mut R,
) -> Result<MessageEnvelope, AbbeError> {
    let (key, header) = encapsulate(mpk, policy, rng)?;
    let aad = associated_data(&header, sender_id, timestamp);
    let (nonce, ciphertext, tag) = content::seal(&key, &aad, plaintext, rng);
    Ok(MessageEnvelope { header, nonce, ciphertext, tag, sender_id: sender_id.to_string(), timestamp })
}

/// Tries `key` against the envelope. Not being a recipient is not an error.
pub fn receive_message(
    envelope: &MessageEnvelope,
    key: &UserPrivateKey,
    mpk: &MasterPublicKey,
) -> Result<Received, RoomError> {
    let session = match decapsulate(mpk, key, &envelope.header) {
        Ok(k) => k,
        Err(AbbeError::NotAuthorized | AbbeError::UnknownUser(_) | AbbeError::UnknownRevokedUser(_)) => return Ok(Received::NotRecipient),
        Err(e) => return Err(e.into()),
    };
    let aad = associated_data(&envelope.header, &envelope.sender_id, envelope.timestamp);
    let plaintext = content::open(&session, &aad, &envelope.nonce, &envelope.ciphertext, &envelope.tag)
        .map_err(|e| match e {
            ContentError::AuthFailure => RoomError::AuthFailure,
            other => RoomError::Format(FormatError::SchemaViolation { path: "$".into(), reason: other.to_string() }),
        })?;
    Ok(Received::Delivered { room: room_id(&envelope.header.policy), plaintext })
}

impl MessageEnvelope {
    pub fn room(&self) -> RoomId {
        room_id(&self.header.policy)
    }

    /// Canonical JSON: the header file object plus base64 body fields.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let v = json!({
            "header": HeaderFile::new(self.header.clone()).to_json(),
            "nonce": B64.encode(self.nonce),
            "ciphertext": B64.encode(&self.ciphertext),
            "tag": B64.encode(self.tag),
            "sender_id": self.sender_id,
            "timestamp": self.timestamp,
        });
        to_canonical_string(&v).into_bytes()
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let violation = |path: &str, reason: &str| FormatError::SchemaViolation {
            path: path.to_string(),
            reason: reason.to_string(),
        };
        let v: Value = serde_json::from_slice(bytes).map_err(|e| FormatError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let obj = v.as_object().ok_or_else(|| violation("$", "expected an object"))?;
        const MEMBERS: [&str; 6] = ["header", "nonce", "ciphertext", "tag", "sender_id", "timestamp"];
        if let Some(k) = obj.keys().find(|k| !MEMBERS.contains(&k.as_str())) {
            return Err(violation(&format!("$.{k}"), "unknown member"));
        }
        let field = |k: &str| obj.get(k).ok_or_else(|| violation("$", &format!("missing member {k:?}")));
        let b64 = |k: &str| -> Result<Vec<u8>, FormatError> {
            let s = field(k)?.as_str().ok_or_else(|| violation(&format!("$.{k}"), "expected a string"))?;
            B64.decode(s).map_err(|e| violation(&format!("$.{k}"), &e.to_string()))
        };
        let header = HeaderFile::from_value(field("header")?).map_err(|e| match e {
            FormatError::SchemaViolation { path, reason } => {
                FormatError::SchemaViolation { path: path.replacen('$', "$.header", 1), reason }
            }
            other => other,
        })?;
        Ok(MessageEnvelope {
            header: header.header,
            nonce: b64("nonce")?.try_into().map_err(|_| violation("$.nonce", "expected 12 bytes"))?,
            ciphertext: b64("ciphertext")?,
            tag: b64("tag")?.try_into().map_err(|_| violation("$.tag", "expected 16 bytes"))?,
            sender_id: field("sender_id")?
                .as_str()
                .ok_or_else(|| violation("$.sender_id", "expected a string"))?
                .to_string(),
            timestamp: field("timestamp")?
                .as_u64()
                .ok_or_else(|| violation("$.timestamp", "expected a non-negative integer"))?,
        })
    }
}

/// `/chat/<sender>/<seq>`
pub fn envelope_name(sender_id: &str, seq: u64) -> Result<Name, NdnError> {
    let bad = || NdnError::Inconsistent(format!("sender id {sender_id:?} is not a valid name component"));
    Name::new(["chat".to_string(), sender_id.to_string(), seq.to_string()]).map_err(|_| bad())
}

/// Publishes under `/chat/<sender>/<seq>`; the producer must have `/chat`
/// (or a longer prefix) registered.
pub fn publish_envelope(producer: &Producer, envelope: &MessageEnvelope, seq: u64) -> Result<Name, NdnError> {
    let name = envelope_name(&envelope.sender_id, seq)?;
    producer.publish(&name, envelope.to_json_bytes(), DEFAULT_CHUNK_SIZE)?;
    Ok(name)
}

pub fn fetch_envelope(consumer: &mut Consumer, name: &Name) -> Result<MessageEnvelope, RoomError> {
    let bytes = consumer.fetch(name)?;
    Ok(MessageEnvelope::from_json_bytes(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abbe::{keygen, setup, AttributeUniverse, UserRecord};
    use crate::pairing::CurveParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fixture() -> (MasterPublicKey, Vec<UserPrivateKey>) {
        let users = [UserRecord::new("ann", ["a", "b"]), UserRecord::new("ben", ["a"])];
        let universe = AttributeUniverse::new(["a", "b"]).unwrap();
        let (mpk, msk) =
            setup(&CurveParams::default_curve(), &universe, &users, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let keys = users.iter().map(|u| keygen(&msk, u).unwrap()).collect();
        (mpk, keys)
    }

    #[test]
    fn room_ids_are_normalization_invariant() {
        let a = AccessPolicy::new(["b", "a"], Vec::<String>::new());
        let b = AccessPolicy::new(["a", "b"], Vec::<String>::new());
        assert_eq!(room_id(&a), room_id(&b));
        assert_ne!(room_id(&a), room_id(&AccessPolicy::new(["a", "b"], ["x"])));
    }

    #[test]
    fn post_and_receive() {
        let (mpk, keys) = fixture();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let policy = AccessPolicy::new(["a", "b"], Vec::<String>::new());
        let env = post_message_at(&mpk, &policy, "ann", b"hi", 1000, &mut rng).unwrap();
        assert_eq!(
            receive_message(&env, &keys[0], &mpk).unwrap(),
            Received::Delivered { room: room_id(&policy), plaintext: b"hi".to_vec() }
        );
        assert_eq!(receive_message(&env, &keys[1], &mpk).unwrap(), Received::NotRecipient);
    }

    #[test]
    fn tampering_is_an_auth_failure() {
        let (mpk, keys) = fixture();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let policy = AccessPolicy::new(["a"], Vec::<String>::new());
        let env = post_message_at(&mpk, &policy, "ann", b"hello", 5, &mut rng).unwrap();
        let mut bad = env.clone();
        bad.ciphertext[0] ^= 1;
        assert!(matches!(receive_message(&bad, &keys[1], &mpk), Err(RoomError::AuthFailure)));
        let mut bad = env.clone();
        bad.sender_id = "mallory".into();
        assert!(matches!(receive_message(&bad, &keys[1], &mpk), Err(RoomError::AuthFailure)));
        let mut bad = env;
        bad.timestamp += 1;
        assert!(matches!(receive_message(&bad, &keys[1], &mpk), Err(RoomError::AuthFailure)));
    }

    #[test]
    fn envelope_json_roundtrip() {
        let (mpk, _) = fixture();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let env = post_message_at(&mpk, &AccessPolicy::new(["a"], ["ben"]), "ann", b"", 7, &mut rng).unwrap();
        let bytes = env.to_json_bytes();
        assert_eq!(MessageEnvelope::from_json_bytes(&bytes).unwrap(), env);
        let mut v: Value = serde_json::from_slice(&bytes).unwrap();
        v["header"]["kdf"] = json!("nope");
        let err = MessageEnvelope::from_json_bytes(&serde_json::to_vec(&v).unwrap()).unwrap_err();
        assert_eq!(err.path(), "$.header.kdf");
    }
}
