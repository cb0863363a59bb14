//! Chunked publish and pipelined fetch over a [`Face`].

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use bytes::Bytes;
use rand::rngs::StdRng;
use rand::SeedableRng;

use super::forwarder::{Packet, PIT_LIFETIME};
use super::runtime::{Face, Forwarder};
use super::{Data, DataSigner, Interest, Name, NdnError, TrustStore};

pub const DEFAULT_CHUNK_SIZE: usize = 4096;
pub const MAX_CHUNK_SIZE: usize = 65536;
pub const DEFAULT_WINDOW: usize = 64;

const POLL: Duration = Duration::from_millis(50);

#[derive(Default)]
struct ProducerShared {
    segments: RwLock<HashMap<Name, Data>>,
    interests: Mutex<HashMap<Name, u64>>,
    interest_total: AtomicU64,
    stop: AtomicBool,
}

/// Serves published segments from a face attached to a local forwarder.
pub struct Producer {
    signer: Arc<dyn DataSigner>,
    face_id: u32,
    routes: Vec<Name>,
    forwarder_routes: crossbeam_channel::Sender<super::runtime::Event>,
    shared: Arc<ProducerShared>,
    thread: Option<JoinHandle<()>>,
}

impl Producer {
    pub fn attach(forwarder: &Forwarder, signer: Arc<dyn DataSigner>) -> Self {
        let face = forwarder.connect();
        let face_id = face.id();
        let shared = Arc::new(ProducerShared::default());
        let serving = shared.clone();
        let thread = std::thread::Builder::new()
            .name("ndn-producer".into())
            .spawn(move || serve(face, serving))
            .expect("spawn producer thread");
        Producer {
            signer,
            face_id,
            routes: Vec::new(),
            forwarder_routes: forwarder.handle().events.clone(),
            shared,
            thread: Some(thread),
        }
    }

    pub fn producer_id(&self) -> &str {
        self.signer.producer_id()
    }

    /// Adds a FIB route for `prefix` towards this producer.
    pub fn register_prefix(&mut self, prefix: Name) {
        let _ = self
            .forwarder_routes
            .send(super::runtime::Event::Route { prefix: prefix.clone(), face: self.face_id });
        self.routes.push(prefix);
    }

    /// Splits `payload` into signed segments and makes them answerable.
    /// Returns the segment count; an empty payload is one empty segment.
    pub fn publish(&self, name: &Name, payload: impl Into<Bytes>, chunk_size: usize) -> Result<u64, NdnError> {
        if !(1..=MAX_CHUNK_SIZE).contains(&chunk_size) {
            return Err(NdnError::InvalidChunkSize(chunk_size));
        }
        if name.segment().is_some() {
            return Err(NdnError::InvalidName(name.clone()));
        }
        if !self.routes.iter().any(|p| p.is_prefix_of(name)) {
            return Err(NdnError::PrefixNotRegistered(name.clone()));
        }
        let payload: Bytes = payload.into();
        let count = payload.len().div_ceil(chunk_size).max(1) as u64;
        let final_segment = u32::try_from(count - 1).map_err(|_| NdnError::TooManySegments(count))?;
        let mut segments = Vec::with_capacity(count as usize);
        for i in 0..count {
            let start = (i as usize) * chunk_size;
            let end = (start + chunk_size).min(payload.len());
            let content = payload.slice(start.min(end)..end);
            segments.push(Data::signed(name.with_segment(i), content, final_segment, self.signer.as_ref()));
        }
        let mut table = self.shared.segments.write().expect("segment table lock");
        for d in segments {
            table.insert(d.name.clone(), d);
        }
        Ok(count)
    }

    /// Interests that reached this producer, over all names.
    pub fn interests_received(&self) -> u64 {
        self.shared.interest_total.load(Ordering::Relaxed)
    }

    /// Interests that reached this producer, per name.
    pub fn interest_counts(&self) -> HashMap<Name, u64> {
        self.shared.interests.lock().expect("interest counter lock").clone()
    }
}

impl Drop for Producer {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn serve(face: Face, shared: Arc<ProducerShared>) {
    while !shared.stop.load(Ordering::Relaxed) {
        let packet = match face.recv_timeout(POLL) {
            Ok(Some(p)) => p,
            Ok(None) => continue,
            Err(_) => break,
        };
        let Packet::Interest(interest) = packet else { continue };
        shared.interest_total.fetch_add(1, Ordering::Relaxed);
        *shared.interests.lock().expect("interest counter lock").entry(interest.name.clone()).or_default() += 1;
        // Unknown names are left unanswered; the consumer times out.
        let data = shared.segments.read().expect("segment table lock").get(&interest.name).cloned();
        if let Some(d) = data {
            if face.send(Packet::Data(d)).is_err() {
                break;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FetchConfig {
    /// Maximum outstanding interests.
    pub window: usize,
    /// Per-interest deadline before retransmission.
    pub timeout: Duration,
    /// Retransmissions per segment before giving up.
    pub retries: u32,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig { window: DEFAULT_WINDOW, timeout: PIT_LIFETIME, retries: 3 }
    }
}

struct Outstanding {
    sent: Instant,
    attempts: u32,
}

/// Fetches segmented objects and verifies every segment.
pub struct Consumer {
    face: Face,
    trust: Arc<TrustStore>,
    config: FetchConfig,
    rng: StdRng,
}

impl Consumer {
    pub fn new(face: Face, trust: Arc<TrustStore>) -> Self {
        Self::with_config(face, trust, FetchConfig::default())
    }

    pub fn with_config(face: Face, trust: Arc<TrustStore>, config: FetchConfig) -> Self {
        assert!(config.window > 0, "window must be positive");
        Consumer { face, trust, config, rng: StdRng::from_entropy() }
    }

    pub fn fetch(&mut self, name: &Name) -> Result<Vec<u8>, NdnError> {
        let mut out = Vec::new();
        self.fetch_into(name, &mut out)?;
        Ok(out)
    }

    /// Writes segments to `out` in order; at most `window` segments are
    /// buffered. On error, bytes already written must be discarded.
    pub fn fetch_into<W: Write>(&mut self, name: &Name, out: &mut W) -> Result<u64, NdnError> {
        if name.segment().is_some() {
            return Err(NdnError::InvalidName(name.clone()));
        }
        let mut final_segment: Option<u64> = None;
        let mut next_request = 0u64;
        let mut next_write = 0u64;
        let mut outstanding: BTreeMap<u64, Outstanding> = BTreeMap::new();
        let mut reorder: BTreeMap<u64, Bytes> = BTreeMap::new();
        let mut written = 0u64;

        loop {
            // Until segment 0 tells us the object size, ask for it alone.
            let limit = final_segment.map_or(1, |f| f + 1);
            if next_write == limit && final_segment.is_some() {
                return Ok(written);
            }
            while outstanding.len() + reorder.len() < self.config.window && next_request < limit {
                self.express(name.with_segment(next_request))?;
                outstanding.insert(next_request, Outstanding { sent: Instant::now(), attempts: 0 });
                next_request += 1;
            }

            let now = Instant::now();
            let deadline = outstanding.values().map(|o| o.sent + self.config.timeout).min().unwrap_or(now);
            match self.face.recv_timeout(deadline.saturating_duration_since(now))? {
                Some(Packet::Data(mut data)) => {
                    let Some(seg) = data.name.segment().filter(|_| data.name.without_segment() == *name) else {
                        continue;
                    };
                    if outstanding.remove(&seg).is_none() {
                        continue;
                    }
                    let Some(producer) = self.trust.verify(&data) else {
                        return Err(NdnError::SignatureInvalid(data.name));
                    };
                    data.producer_id = producer.to_string();
                    let f = u64::from(data.final_segment);
                    match final_segment {
                        None => final_segment = Some(f),
                        Some(known) if known != f => {
                            return Err(NdnError::Inconsistent(format!("{} changes final segment", data.name)))
                        }
                        Some(_) => {}
                    }
                    if seg > f {
                        return Err(NdnError::Inconsistent(format!("{} is past the final segment", data.name)));
                    }
                    reorder.insert(seg, data.content);
                    while let Some(chunk) = reorder.remove(&next_write) {
                        out.write_all(&chunk)?;
                        written += chunk.len() as u64;
                        next_write += 1;
                    }
                }
                Some(Packet::Nack(nack)) => {
                    if nack.name.without_segment() == *name {
                        return Err(NdnError::NoRoute(name.clone()));
                    }
                }
                Some(Packet::Interest(_)) => {}
                None => {
                    let now = Instant::now();
                    let expired: Vec<u64> = outstanding
                        .iter()
                        .filter(|(_, o)| o.sent + self.config.timeout <= now)
                        .map(|(s, _)| *s)
                        .collect();
                    for seg in expired {
                        let o = outstanding.get_mut(&seg).expect("listed above");
                        if o.attempts >= self.config.retries {
                            return Err(NdnError::Timeout(name.with_segment(seg)));
                        }
                        o.attempts += 1;
                        o.sent = now;
                        self.express(name.with_segment(seg))?;
                    }
                }
            }
        }
    }

    fn express(&mut self, name: Name) -> Result<(), NdnError> {
        self.face.send(Packet::Interest(Interest::new(name, &mut self.rng)))
    }
}
