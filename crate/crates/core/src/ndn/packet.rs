use std::fmt;

use bytes::Bytes;
use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::Name;

pub const SIGNATURE_LEN: usize = 64;

/// Request for one named object. Carries no face or host identifiers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interest {
    pub name: Name,
    pub nonce: [u8; 4],
}

impl Interest {
    pub fn new<R: RngCore>(name: Name, rng: &mut R) -> Self {
        let mut nonce = [0u8; 4];
        rng.fill_bytes(&mut nonce);
        Interest { name, nonce }
    }
}

/// One signed segment.
///
/// `producer_id` is not carried on the wire: packets decoded from a socket
/// have it empty until a [`TrustStore`] vouches for them.
#[derive(Clone, PartialEq, Eq)]
pub struct Data {
    pub name: Name,
    pub content: Bytes,
    pub final_segment: u32,
    pub producer_id: String,
    pub signature: Vec<u8>,
}

impl fmt::Debug for Data {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Data")
            .field("name", &self.name.to_string())
            .field("content_len", &self.content.len())
            .field("final_segment", &self.final_segment)
            .field("producer_id", &self.producer_id)
            .finish_non_exhaustive()
    }
}

/// `SHA-256(u16 name_len | name | u32 final_segment | content)`.
pub fn signed_digest(name: &Name, final_segment: u32, content: &[u8]) -> [u8; 32] {
    let name = name.to_string();
    Sha256::new()
        .chain_update((name.len() as u16).to_be_bytes())
        .chain_update(name.as_bytes())
        .chain_update(final_segment.to_be_bytes())
        .chain_update(content)
        .finalize()
        .into()
}

impl Data {
    pub fn signed(name: Name, content: Bytes, final_segment: u32, signer: &dyn DataSigner) -> Self {
        let signature = signer.sign(&signed_digest(&name, final_segment, &content));
        Data { name, content, final_segment, producer_id: signer.producer_id().to_string(), signature }
    }

    pub fn digest(&self) -> [u8; 32] {
        signed_digest(&self.name, self.final_segment, &self.content)
    }
}

/// Signature scheme used by producers.
pub trait DataSigner: Send + Sync {
    fn producer_id(&self) -> &str;
    fn sign(&self, digest: &[u8; 32]) -> Vec<u8>;
}

pub trait DataVerifier: Send + Sync {
    fn verify(&self, digest: &[u8; 32], signature: &[u8]) -> bool;
}

/// Deterministic Ed25519 signatures over the segment digest.
pub struct Ed25519Signer {
    producer_id: String,
    key: SigningKey,
}

impl Ed25519Signer {
    pub fn from_seed(producer_id: impl Into<String>, seed: [u8; 32]) -> Self {
        Ed25519Signer { producer_id: producer_id.into(), key: SigningKey::from_bytes(&seed) }
    }

    pub fn generate<R: RngCore + CryptoRng>(producer_id: impl Into<String>, rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Self::from_seed(producer_id, seed)
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        self.key.verifying_key()
    }
}

impl DataSigner for Ed25519Signer {
    fn producer_id(&self) -> &str {
        &self.producer_id
    }

    fn sign(&self, digest: &[u8; 32]) -> Vec<u8> {
        self.key.sign(digest).to_bytes().to_vec()
    }
}

impl DataVerifier for VerifyingKey {
    fn verify(&self, digest: &[u8; 32], signature: &[u8]) -> bool {
        let Ok(sig) = Signature::from_slice(signature) else {
            return false;
        };
        Verifier::verify(self, digest, &sig).is_ok()
    }
}

struct Anchor {
    prefix: Name,
    producer_id: String,
    verifier: Box<dyn DataVerifier>,
}

/// Maps name prefixes to the producer allowed to sign under them.
#[derive(Default)]
pub struct TrustStore {
    anchors: Vec<Anchor>,
}

impl TrustStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn trust(&mut self, prefix: Name, producer_id: impl Into<String>, verifier: impl DataVerifier + 'static) {
        self.anchors.push(Anchor { prefix, producer_id: producer_id.into(), verifier: Box::new(verifier) });
    }

    /// Checks the signature against the longest matching prefix and
    /// returns that producer's id.
    pub fn verify(&self, data: &Data) -> Option<&str> {
        let anchor = self
            .anchors
            .iter()
            .filter(|a| a.prefix.is_prefix_of(&data.name))
            .max_by_key(|a| a.prefix.depth())?;
        anchor.verifier.verify(&data.digest(), &data.signature).then_some(anchor.producer_id.as_str())
    }
}
