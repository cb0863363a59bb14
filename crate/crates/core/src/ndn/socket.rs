//! TCP faces carrying [`wire`](super::wire) frames.

use std::io::{self, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, Sender};

use super::forwarder::Packet;
use super::runtime::{Event, Face, FaceTx, Forwarder, ForwarderHandle};
use super::wire::{read_frame, write_frame};

const ACCEPT_POLL: Duration = Duration::from_millis(50);

/// Writes queued packets until the queue closes, then shuts the socket down.
fn spawn_writer(stream: TcpStream, outbound: Receiver<Packet>) -> io::Result<()> {
    std::thread::Builder::new().name("ndn-socket-tx".into()).spawn(move || {
        let mut w = BufWriter::new(&stream);
        'outer: while let Ok(p) = outbound.recv() {
            if write_frame(&mut w, &p).is_err() {
                break;
            }
            while let Ok(p) = outbound.try_recv() {
                if write_frame(&mut w, &p).is_err() {
                    break 'outer;
                }
            }
            if w.flush().is_err() {
                break;
            }
        }
        let _ = w.flush();
        drop(w);
        let _ = stream.shutdown(Shutdown::Both);
    })?;
    Ok(())
}

/// Forwards decoded packets to `deliver` until the stream ends or `deliver` fails.
fn spawn_reader(stream: TcpStream, deliver: impl Fn(Packet) -> bool + Send + 'static, on_close: impl FnOnce() + Send + 'static) -> io::Result<()> {
    std::thread::Builder::new().name("ndn-socket-rx".into()).spawn(move || {
        let mut r = BufReader::new(&stream);
        while let Ok(Some(p)) = read_frame(&mut r) {
            if !deliver(p) {
                break;
            }
        }
        let _ = stream.shutdown(Shutdown::Both);
        on_close();
    })?;
    Ok(())
}

fn attach_stream(handle: &ForwarderHandle, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let face = handle.allocate_face();
    let (outbound, queue) = unbounded();
    let _ = handle.events.send(Event::Attach { face, outbound });
    spawn_writer(stream.try_clone()?, queue)?;
    let events = handle.events.clone();
    let closing = handle.events.clone();
    spawn_reader(
        stream,
        move |packet| events.send(Event::Packet { face, packet }).is_ok(),
        move || {
            let _ = closing.send(Event::Detach(face));
        },
    )
}

/// Accepts TCP connections and attaches each one as a forwarder face.
pub struct SocketListener {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl SocketListener {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for SocketListener {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Forwarder {
    pub fn listen_tcp(&self, addr: impl ToSocketAddrs) -> io::Result<SocketListener> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let handle = self.handle().clone();
        let stopping = stop.clone();
        let thread = std::thread::Builder::new().name("ndn-accept".into()).spawn(move || {
            while !stopping.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        if stream.set_nonblocking(false).is_ok() {
                            let _ = attach_stream(&handle, stream);
                        }
                    }
                    Err(e) if e.kind() == io::ErrorKind::WouldBlock => std::thread::sleep(ACCEPT_POLL),
                    Err(_) => std::thread::sleep(ACCEPT_POLL),
                }
            }
        })?;
        Ok(SocketListener { addr, stop, thread: Some(thread) })
    }
}

impl Face {
    /// Connects to a forwarder listening with [`Forwarder::listen_tcp`].
    pub fn connect_tcp(addr: impl ToSocketAddrs) -> io::Result<Face> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let (outbound, queue): (Sender<Packet>, _) = unbounded();
        let (inbound, rx) = unbounded();
        spawn_writer(stream.try_clone()?, queue)?;
        spawn_reader(stream, move |p| inbound.send(p).is_ok(), || {})?;
        Ok(Face { id: 0, tx: FaceTx::Remote(outbound), rx })
    }
}
