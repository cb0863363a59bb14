//! Experiments 3 and 4: concurrent downloads through one forwarder.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use abbe_core::content::{decrypt_stream, encrypt_stream};
use bytes::Bytes;
use abbe_core::formats::{load_header, save_header, HeaderFile};
use abbe_core::ndn::{Consumer, Ed25519Signer, Forwarder, Producer, TrustStore, DEFAULT_CHUNK_SIZE};
use abbe_core::{
    decapsulate, encapsulate, keygen, setup, AccessPolicy, AttributeUniverse, CurveParams, MasterPublicKey, Name,
    UserPrivateKey, UserRecord,
};
use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::stats::median_index;
use crate::{BenchError, BenchmarkRecord};

pub const MIB: usize = 1 << 20;
pub const HEADER_NAME: &str = "/headers/header.json";
const PRODUCER_ID: &str = "bench-publisher";

pub fn data_name(file_mib: u64, ext: &str) -> Name {
    format!("/data/file{file_mib}M.{ext}").parse().expect("valid name")
}

/// Bytes from a seeded PRNG, standing in for `/dev/urandom` output.
pub fn random_file(len: usize, seed: u64) -> Vec<u8> {
    let mut v = vec![0u8; len];
    ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut v);
    v
}

/// A forwarder with one producer serving `/data` and `/headers`.
pub struct Testbed {
    // Declared first so it detaches before the forwarder stops.
    producer: Producer,
    forwarder: Forwarder,
    trust: Arc<TrustStore>,
}

impl Testbed {
    pub fn new(cs_capacity: usize) -> Self {
        let forwarder = Forwarder::spawn(cs_capacity);
        let signer = Arc::new(Ed25519Signer::from_seed(PRODUCER_ID, [7; 32]));
        let mut trust = TrustStore::new();
        let mut producer = Producer::attach(&forwarder, signer.clone());
        for prefix in ["/data", "/headers"] {
            let prefix: Name = prefix.parse().expect("valid prefix");
            trust.trust(prefix.clone(), PRODUCER_ID, signer.verifying_key());
            producer.register_prefix(prefix);
        }
        Testbed { producer, forwarder, trust: Arc::new(trust) }
    }

    pub fn publish(&self, name: &Name, payload: impl Into<Bytes>) -> Result<u64, BenchError> {
        Ok(self.producer.publish(name, payload, DEFAULT_CHUNK_SIZE)?)
    }

    pub fn consumer(&self) -> Consumer {
        Consumer::new(self.forwarder.connect(), self.trust.clone())
    }

    /// Interests that reached the producer.
    pub fn upstream_interests(&self) -> u64 {
        self.producer.interests_received()
    }

    pub fn forwarder(&self) -> &Forwarder {
        &self.forwarder
    }
}

/// Runs one thread per user; returns each thread's result in user order.
fn per_user<T: Send>(users: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..users).map(|u| s.spawn({
            let job = &job;
            move || job(u)
        })).collect();
        handles.into_iter().map(|h| h.join().expect("user thread panicked")).collect()
    })
}

/// `users` concurrent fetches of `name`, each hash-checked against
/// `expected`. Returns per-user seconds and the wall time.
pub fn concurrent_fetch(
    bed: &Testbed,
    name: &Name,
    users: usize,
    expected: &[u8; 32],
) -> Result<(Vec<f64>, f64), BenchError> {
    let start = Instant::now();
    let results = per_user(users, |u| {
        let mut consumer = bed.consumer();
        let t = Instant::now();
        let mut hasher = Sha256::new();
        consumer.fetch_into(name, &mut hasher)?;
        let elapsed = t.elapsed().as_secs_f64();
        if hasher.finalize().as_slice() != expected {
            return Err(BenchError::HashMismatch { user: format!("user-{u}") });
        }
        Ok(elapsed)
    });
    let wall = start.elapsed().as_secs_f64();
    Ok((results.into_iter().collect::<Result<_, _>>()?, wall))
}

/// Plaintext downloads of freshly published files.
pub fn experiment3(
    user_counts: &[usize],
    file_sizes_mib: &[u64],
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchmarkRecord>, BenchError> {
    if user_counts.is_empty() || file_sizes_mib.is_empty() || user_counts.contains(&0) {
        return Err(BenchError::Plan("need at least one file size and positive user counts".into()));
    }
    let mut out = Vec::new();
    for &mib in file_sizes_mib {
        let file = random_file(mib as usize * MIB, seed ^ mib);
        let digest: [u8; 32] = Sha256::digest(&file).into();
        let file = Bytes::from(file);
        let name = data_name(mib, "bin");
        for &users in user_counts {
            let mut runs = Vec::new();
            for _ in 0..reps.max(1) {
                // Fresh forwarder per run: every run starts with a cold cache.
                let bed = Testbed::new(abbe_core::ndn::DEFAULT_CS_CAPACITY);
                let segments = bed.publish(&name, file.clone())?;
                let (times, wall) = concurrent_fetch(&bed, &name, users, &digest)?;
                let upstream = bed.upstream_interests();
                if upstream != segments {
                    return Err(BenchError::Aggregation { segments, upstream });
                }
                runs.push((times, wall));
            }
            let worst: Vec<f64> = runs.iter().map(|(t, _)| t.iter().copied().fold(0.0, f64::max)).collect();
            let (times, wall) = runs.swap_remove(median_index(&worst).expect("at least one run"));
            out.push(BenchmarkRecord::new(3, users, 0, mib, wall, times));
        }
    }
    Ok(out)
}

/// Keys, a published header and a published `.aes` object.
pub struct EncryptedFixture {
    pub mpk: MasterPublicKey,
    pub keys: Vec<UserPrivateKey>,
    pub policy: AccessPolicy,
    pub header_name: Name,
    pub object_name: Name,
    pub plaintext_digest: [u8; 32],
    pub header_bytes: usize,
}

pub const FIXTURE_ATTRIBUTES: [&str; 2] = ["member", "reader"];

/// Generates `users` keys holding every policy attribute, revokes the last
/// `revoked` of them, encrypts a random file of `file_mib` MiB and
/// publishes header and ciphertext on `bed`.
pub fn prepare_encrypted<R: RngCore + CryptoRng>(
    bed: &Testbed,
    users: usize,
    revoked: usize,
    file_mib: u64,
    rng: &mut R,
) -> Result<EncryptedFixture, BenchError> {
    let pool = ["member", "reader", "guest"];
    let records: Vec<UserRecord> =
        (0..users).map(|i| UserRecord::new(format!("user-{i:02}"), FIXTURE_ATTRIBUTES)).collect();
    let (mpk, msk) = setup(&CurveParams::default_curve(), &AttributeUniverse::new(pool)?, &records, rng)?;
    let keys = records.iter().map(|u| keygen(&msk, u)).collect::<Result<Vec<_>, _>>()?;
    let revoked_ids: Vec<String> = records[users - revoked.min(users)..].iter().map(|u| u.user_id.clone()).collect();
    let policy = AccessPolicy::new(FIXTURE_ATTRIBUTES, revoked_ids);
    let (session, header) = encapsulate(&mpk, &policy, rng)?;

    let header_name: Name = HEADER_NAME.parse().expect("valid name");
    let header_json = save_header(&HeaderFile::new(header));
    let header_bytes = header_json.len();
    bed.publish(&header_name, header_json)?;

    let plaintext = random_file(file_mib as usize * MIB, rng.next_u64());
    let plaintext_digest = Sha256::digest(&plaintext).into();
    let mut aes = Vec::with_capacity(plaintext.len() + 64);
    encrypt_stream(&session, &header_name, &plaintext[..], &mut aes, rng)?;
    drop(plaintext);
    let object_name = data_name(file_mib, "aes");
    bed.publish(&object_name, aes)?;
    Ok(EncryptedFixture { mpk, keys, policy, header_name, object_name, plaintext_digest, header_bytes })
}

/// Fetches and decapsulates the header, then streams the `.aes` object
/// through decryption into a hash. Returns the elapsed seconds.
///
/// A key that fails the policy stops at the header and never fetches the
/// ciphertext.
pub fn fetch_and_decrypt(bed: &Testbed, fx: &EncryptedFixture, key: &UserPrivateKey) -> Result<f64, BenchError> {
    let start = Instant::now();
    let mut consumer = bed.consumer();
    let header = load_header(&consumer.fetch(&fx.header_name)?)?;
    let session = decapsulate(&fx.mpk, key, &header.header)?;

    let (reader, mut writer) = std::io::pipe()?;
    let digest = std::thread::scope(|s| {
        let decrypting = s.spawn(move || -> Result<[u8; 32], BenchError> {
            let mut hasher = Sha256::new();
            let (name, _) = decrypt_stream(&session, reader, &mut hasher)?;
            if name != fx.header_name {
                return Err(BenchError::HashMismatch { user: key.user_id.clone() });
            }
            Ok(hasher.finalize().into())
        });
        let fetched = consumer.fetch_into(&fx.object_name, &mut writer).map_err(BenchError::from);
        let _ = writer.flush();
        drop(writer);
        let decrypted = decrypting.join().expect("decrypt thread panicked");
        fetched?;
        decrypted
    })?;
    if digest != fx.plaintext_digest {
        return Err(BenchError::HashMismatch { user: key.user_id.clone() });
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Runs [`fetch_and_decrypt`] concurrently, one thread per key.
pub fn concurrent_decrypt(bed: &Testbed, fx: &EncryptedFixture, keys: &[UserPrivateKey]) -> Vec<Result<f64, BenchError>> {
    per_user(keys.len(), |u| fetch_and_decrypt(bed, fx, &keys[u]))
}

/// Encrypted downloads: header plus `.aes` object, decapsulate, decrypt.
pub fn experiment4<R: RngCore + CryptoRng>(
    user_counts: &[usize],
    file_sizes_mib: &[u64],
    reps: usize,
    rng: &mut R,
) -> Result<Vec<BenchmarkRecord>, BenchError> {
    if user_counts.is_empty() || file_sizes_mib.is_empty() || user_counts.contains(&0) {
        return Err(BenchError::Plan("need at least one file size and positive user counts".into()));
    }
    let mut out = Vec::new();
    for &mib in file_sizes_mib {
        for &users in user_counts {
            let mut runs = Vec::new();
            for _ in 0..reps.max(1) {
                let bed = Testbed::new(abbe_core::ndn::DEFAULT_CS_CAPACITY);
                let fx = prepare_encrypted(&bed, users, 0, mib, rng)?;
                let start = Instant::now();
                let times = concurrent_decrypt(&bed, &fx, &fx.keys).into_iter().collect::<Result<Vec<_>, _>>()?;
                runs.push((times, start.elapsed().as_secs_f64()));
            }
            let worst: Vec<f64> = runs.iter().map(|(t, _)| t.iter().copied().fold(0.0, f64::max)).collect();
            let (times, wall) = runs.swap_remove(median_index(&worst).expect("at least one run"));
            out.push(BenchmarkRecord::new(4, users, FIXTURE_ATTRIBUTES.len(), mib, wall, times));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use abbe_core::AbbeError;

    #[test]
    fn experiment3_tiny() {
        let records = experiment3(&[1, 3], &[1], 1, 9).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!((records[1].users, records[1].file_mib), (3, 1));
        assert!(records.iter().all(BenchmarkRecord::is_consistent));
    }

    #[test]
    fn experiment4_tiny() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let records = experiment4(&[2], &[1], 1, &mut rng).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].per_user_seconds.len(), 2);
    }

    #[test]
    fn revoked_user_stops_at_the_header() {
        let bed = Testbed::new(1 << 12);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let fx = prepare_encrypted(&bed, 3, 1, 1, &mut rng).unwrap();
        // k = 1: phantom share plus one revoked share
        assert_eq!(fx.policy.revoked_users.len(), 1);
        let before = bed.upstream_interests();
        let err = fetch_and_decrypt(&bed, &fx, &fx.keys[2]).unwrap_err();
        assert!(matches!(err, BenchError::Abbe(AbbeError::NotAuthorized)));
        // only the header's single segment was requested
        assert_eq!(bed.upstream_interests() - before, 1);
        assert!(fetch_and_decrypt(&bed, &fx, &fx.keys[0]).is_ok());
    }
}
