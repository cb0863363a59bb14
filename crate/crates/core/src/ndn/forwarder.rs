//! Forwarding state: content store, pending interest table and FIB.
//!
//! [`ForwarderState`] is a pure state machine: it consumes one packet and
//! returns the packets to send, with no I/O. The threaded runtime in
//! `runtime.rs` drives it from a queue.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::{Duration, Instant};

use super::{Data, Interest, Name};

pub type FaceId = u32;

pub const DEFAULT_CS_CAPACITY: usize = 65536;
pub const CS_CAPACITY_ENV: &str = "ABBE_NDN_CS_CAPACITY";
pub const PIT_LIFETIME: Duration = Duration::from_secs(4);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum NackReason {
    NoRoute = 1,
}

impl NackReason {
    pub fn from_u8(v: u8) -> Option<Self> {
        (v == 1).then_some(NackReason::NoRoute)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nack {
    pub name: Name,
    pub reason: NackReason,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Packet {
    Interest(Interest),
    Data(Data),
    Nack(Nack),
}

impl Packet {
    pub fn name(&self) -> &Name {
        match self {
            Packet::Interest(i) => &i.name,
            Packet::Data(d) => &d.name,
            Packet::Nack(n) => &n.name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PitEntry {
    pub name: Name,
    pub pending_faces: BTreeSet<FaceId>,
    nonces: BTreeSet<[u8; 4]>,
    expires: Instant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FibEntry {
    pub prefix: Name,
    pub next_face: FaceId,
}

/// FIFO-evicting segment cache.
#[derive(Debug)]
pub struct ContentStore {
    capacity: usize,
    entries: HashMap<Name, Data>,
    order: VecDeque<Name>,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        ContentStore { capacity, entries: HashMap::new(), order: VecDeque::new() }
    }

    pub fn get(&self, name: &Name) -> Option<&Data> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &Name) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Returns how many entries were evicted. Re-inserting a cached name
    /// refreshes the data but keeps its original queue position.
    pub fn insert(&mut self, data: Data) -> usize {
        if self.capacity == 0 {
            return 0;
        }
        if let Some(slot) = self.entries.get_mut(&data.name) {
            *slot = data;
            return 0;
        }
        let mut evicted = 0;
        while self.entries.len() >= self.capacity {
            let oldest = self.order.pop_front().expect("order tracks entries");
            self.entries.remove(&oldest);
            evicted += 1;
        }
        self.order.push_back(data.name.clone());
        self.entries.insert(data.name.clone(), data);
        evicted
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ForwarderStats {
    pub interests_received: u64,
    pub interests_forwarded: u64,
    pub interests_aggregated: u64,
    pub duplicate_interests: u64,
    pub cs_hits: u64,
    pub data_received: u64,
    pub data_delivered: u64,
    pub unsolicited_data: u64,
    pub nacks_sent: u64,
    pub cs_evictions: u64,
}

#[derive(Debug)]
pub struct ForwarderState {
    cs: ContentStore,
    pit: HashMap<Name, PitEntry>,
    fib: Vec<FibEntry>,
    stats: ForwarderStats,
}

impl ForwarderState {
    pub fn new(cs_capacity: usize) -> Self {
        ForwarderState { cs: ContentStore::new(cs_capacity), pit: HashMap::new(), fib: Vec::new(), stats: Default::default() }
    }

    pub fn content_store(&self) -> &ContentStore {
        &self.cs
    }

    pub fn pit_entry(&self, name: &Name) -> Option<&PitEntry> {
        self.pit.get(name)
    }

    pub fn pit_len(&self) -> usize {
        self.pit.len()
    }

    pub fn stats(&self) -> ForwarderStats {
        self.stats
    }

    pub fn add_route(&mut self, prefix: Name, next_face: FaceId) {
        if !self.fib.iter().any(|e| e.prefix == prefix && e.next_face == next_face) {
            self.fib.push(FibEntry { prefix, next_face });
        }
    }

    /// Drops routes through `face` and forgets it as a pending downstream.
    pub fn remove_face(&mut self, face: FaceId) {
        self.fib.retain(|e| e.next_face != face);
        self.pit.retain(|_, entry| {
            entry.pending_faces.remove(&face);
            !entry.pending_faces.is_empty()
        });
    }

    /// Longest-prefix match; ties go to the earliest route.
    pub fn lookup_route(&self, name: &Name) -> Option<FaceId> {
        let mut best: Option<&FibEntry> = None;
        for e in self.fib.iter().filter(|e| e.prefix.is_prefix_of(name)) {
            if best.map_or(true, |b| e.prefix.depth() > b.prefix.depth()) {
                best = Some(e);
            }
        }
        best.map(|e| e.next_face)
    }

    pub fn on_interest(&mut self, interest: Interest, in_face: FaceId, now: Instant) -> Vec<(FaceId, Packet)> {
        self.stats.interests_received += 1;
        if let Some(data) = self.cs.get(&interest.name) {
            self.stats.cs_hits += 1;
            self.stats.data_delivered += 1;
            return vec![(in_face, Packet::Data(data.clone()))];
        }
        if let Some(entry) = self.pit.get_mut(&interest.name) {
            if entry.expires > now {
                if !entry.nonces.insert(interest.nonce) && entry.pending_faces.contains(&in_face) {
                    self.stats.duplicate_interests += 1;
                    return Vec::new();
                }
                entry.pending_faces.insert(in_face);
                self.stats.interests_aggregated += 1;
                return Vec::new();
            }
        }
        let Some(upstream) = self.lookup_route(&interest.name).filter(|f| *f != in_face) else {
            self.pit.remove(&interest.name);
            self.stats.nacks_sent += 1;
            return vec![(in_face, Packet::Nack(Nack { name: interest.name, reason: NackReason::NoRoute }))];
        };
        // An expired entry is renewed: its downstreams are still waiting.
        let entry = self.pit.entry(interest.name.clone()).or_insert_with(|| PitEntry {
            name: interest.name.clone(),
            pending_faces: BTreeSet::new(),
            nonces: BTreeSet::new(),
            expires: now,
        });
        entry.pending_faces.insert(in_face);
        entry.nonces.insert(interest.nonce);
        entry.expires = now + PIT_LIFETIME;
        self.stats.interests_forwarded += 1;
        vec![(upstream, Packet::Interest(interest))]
    }

    pub fn on_data(&mut self, data: Data, _in_face: FaceId) -> Vec<(FaceId, Packet)> {
        self.stats.data_received += 1;
        let Some(entry) = self.pit.remove(&data.name) else {
            self.stats.unsolicited_data += 1;
            return Vec::new();
        };
        let out: Vec<(FaceId, Packet)> =
            entry.pending_faces.iter().map(|f| (*f, Packet::Data(data.clone()))).collect();
        self.stats.data_delivered += out.len() as u64;
        self.stats.cs_evictions += self.cs.insert(data) as u64;
        out
    }

    /// Upstream nacks are passed to every pending downstream.
    pub fn on_nack(&mut self, nack: Nack, _in_face: FaceId) -> Vec<(FaceId, Packet)> {
        let Some(entry) = self.pit.remove(&nack.name) else {
            return Vec::new();
        };
        self.stats.nacks_sent += entry.pending_faces.len() as u64;
        entry.pending_faces.iter().map(|f| (*f, Packet::Nack(nack.clone()))).collect()
    }

    pub fn on_packet(&mut self, packet: Packet, in_face: FaceId, now: Instant) -> Vec<(FaceId, Packet)> {
        match packet {
            Packet::Interest(i) => self.on_interest(i, in_face, now),
            Packet::Data(d) => self.on_data(d, in_face),
            Packet::Nack(n) => self.on_nack(n, in_face),
        }
    }

    /// Removes PIT entries whose lifetime has passed.
    pub fn expire(&mut self, now: Instant) {
        self.pit.retain(|_, e| e.expires > now);
    }
}

/// CS capacity from [`CS_CAPACITY_ENV`], or the default.
pub fn cs_capacity_from_env() -> usize {
    std::env::var(CS_CAPACITY_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_CS_CAPACITY)
}
