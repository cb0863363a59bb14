//! Threaded forwarder: one event thread owns [`ForwarderState`]; faces talk
//! to it only through a queue.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use super::forwarder::{cs_capacity_from_env, FaceId, ForwarderState, ForwarderStats, Packet};
use super::{Name, NdnError};

const SWEEP_INTERVAL: Duration = Duration::from_millis(500);

type Inspector = Box<dyn FnOnce(&ForwarderState) + Send>;

pub(crate) enum Event {
    Packet { face: FaceId, packet: Packet },
    Attach { face: FaceId, outbound: Sender<Packet> },
    Detach(FaceId),
    Route { prefix: Name, face: FaceId },
    Inspect(Inspector),
    Shutdown,
}

/// Cloneable handle for threads that attach faces (socket acceptors).
#[derive(Clone)]
pub(crate) struct ForwarderHandle {
    pub(crate) events: Sender<Event>,
    next_face: Arc<AtomicU32>,
}

impl ForwarderHandle {
    pub(crate) fn allocate_face(&self) -> FaceId {
        self.next_face.fetch_add(1, Ordering::Relaxed)
    }
}

pub struct Forwarder {
    handle: ForwarderHandle,
    thread: Option<JoinHandle<()>>,
}

impl Forwarder {
    pub fn spawn(cs_capacity: usize) -> Self {
        let (events, rx) = unbounded();
        let thread = std::thread::Builder::new()
            .name("ndn-forwarder".into())
            .spawn(move || run(ForwarderState::new(cs_capacity), rx))
            .expect("spawn forwarder thread");
        Forwarder { handle: ForwarderHandle { events, next_face: Arc::new(AtomicU32::new(1)) }, thread: Some(thread) }
    }

    /// CS capacity from the environment override, or the default.
    pub fn spawn_from_env() -> Self {
        Self::spawn(cs_capacity_from_env())
    }

    pub(crate) fn handle(&self) -> &ForwarderHandle {
        &self.handle
    }

    /// Attaches a new in-process face.
    pub fn connect(&self) -> Face {
        let id = self.handle.allocate_face();
        let (outbound, rx) = unbounded();
        let _ = self.handle.events.send(Event::Attach { face: id, outbound });
        Face { id, tx: FaceTx::Local(self.handle.events.clone()), rx }
    }

    pub fn add_route(&self, prefix: Name, face: FaceId) {
        let _ = self.handle.events.send(Event::Route { prefix, face });
    }

    /// Runs `f` on the event thread, after every event queued before it.
    pub fn inspect<T: Send + 'static>(&self, f: impl FnOnce(&ForwarderState) -> T + Send + 'static) -> T {
        let (tx, rx) = crossbeam_channel::bounded(1);
        let _ = self.handle.events.send(Event::Inspect(Box::new(move |s| {
            let _ = tx.send(f(s));
        })));
        rx.recv().expect("forwarder thread is running")
    }

    pub fn stats(&self) -> ForwarderStats {
        self.inspect(|s| s.stats())
    }
}

impl Drop for Forwarder {
    fn drop(&mut self) {
        let _ = self.handle.events.send(Event::Shutdown);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn run(mut state: ForwarderState, events: Receiver<Event>) {
    let mut faces: HashMap<FaceId, Sender<Packet>> = HashMap::new();
    let mut last_sweep = Instant::now();
    loop {
        match events.recv_timeout(SWEEP_INTERVAL) {
            Ok(Event::Packet { face, packet }) => {
                let mut dead = Vec::new();
                for (out_face, out) in state.on_packet(packet, face, Instant::now()) {
                    if let Some(tx) = faces.get(&out_face) {
                        if tx.send(out).is_err() {
                            dead.push(out_face);
                        }
                    }
                }
                for f in dead {
                    faces.remove(&f);
                    state.remove_face(f);
                }
            }
            Ok(Event::Attach { face, outbound }) => {
                faces.insert(face, outbound);
            }
            Ok(Event::Detach(face)) => {
                faces.remove(&face);
                state.remove_face(face);
            }
            Ok(Event::Route { prefix, face }) => state.add_route(prefix, face),
            Ok(Event::Inspect(f)) => f(&state),
            Ok(Event::Shutdown) | Err(RecvTimeoutError::Disconnected) => break,
            Err(RecvTimeoutError::Timeout) => {}
        }
        let now = Instant::now();
        if now.duration_since(last_sweep) >= SWEEP_INTERVAL {
            state.expire(now);
            last_sweep = now;
        }
    }
}

pub(crate) enum FaceTx {
    Local(Sender<Event>),
    Remote(Sender<Packet>),
}

/// An attachment point to a forwarder, in-process or over a socket.
pub struct Face {
    pub(crate) id: FaceId,
    pub(crate) tx: FaceTx,
    pub(crate) rx: Receiver<Packet>,
}

impl Face {
    pub fn id(&self) -> FaceId {
        self.id
    }

    pub fn send(&self, packet: Packet) -> Result<(), NdnError> {
        let ok = match &self.tx {
            FaceTx::Local(events) => events.send(Event::Packet { face: self.id, packet }).is_ok(),
            FaceTx::Remote(tx) => tx.send(packet).is_ok(),
        };
        ok.then_some(()).ok_or(NdnError::Disconnected)
    }

    /// `Ok(None)` when nothing arrived within `timeout`.
    pub fn recv_timeout(&self, timeout: Duration) -> Result<Option<Packet>, NdnError> {
        match self.rx.recv_timeout(timeout) {
            Ok(p) => Ok(Some(p)),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(NdnError::Disconnected),
        }
    }
}

impl Drop for Face {
    fn drop(&mut self) {
        if let FaceTx::Local(events) = &self.tx {
            let _ = events.send(Event::Detach(self.id));
        }
    }
}
