//! TCP front end of the bridge. A connection whose first bytes are `GET `
//! is upgraded to WebSocket (one or more NDJSON lines per text message);
//! anything else speaks raw NDJSON.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tracing::{debug, info, warn};
use tungstenite::Message;

use quadsocial_core::bridge::{Command, CommandKind};
use quadsocial_core::classifier::ClassifierConfig;

use crate::hub::{ClientId, Hub, Status, Suppressed};
use crate::{Error, Result};

const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);
const SNIFF_WINDOW: Duration = Duration::from_millis(250);
const WS_POLL: Duration = Duration::from_millis(10);

pub type SharedHub = Arc<Mutex<Hub>>;

fn lock(hub: &SharedHub) -> MutexGuard<'_, Hub> {
    hub.lock().unwrap_or_else(|p| p.into_inner())
}

pub struct BridgeServer {
    listener: TcpListener,
    hub: SharedHub,
}

impl BridgeServer {
    pub fn bind(addr: impl ToSocketAddrs, cfg: ClassifierConfig) -> Result<Self> {
        let listener = TcpListener::bind(addr)?;
        Ok(Self { listener, hub: Arc::new(Mutex::new(Hub::new(cfg)?)) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    pub fn hub(&self) -> SharedHub {
        Arc::clone(&self.hub)
    }

    /// Accept connections until `stop` is set.
    fn accept_loop(self, stop: Arc<AtomicBool>) {
        for stream in self.listener.incoming() {
            if stop.load(Ordering::SeqCst) {
                break;
            }
            match stream {
                Ok(s) => {
                    let hub = Arc::clone(&self.hub);
                    thread::spawn(move || {
                        let peer = s.peer_addr().ok();
                        if let Err(e) = serve_connection(s, &hub) {
                            debug!(?peer, error = %e, "connection ended");
                        }
                    });
                }
                Err(e) => warn!(error = %e, "accept failed"),
            }
        }
    }

    /// Serve in the current thread, forever.
    pub fn run(self) -> Result<()> {
        info!(addr = %self.local_addr()?, "bridge listening");
        self.accept_loop(Arc::new(AtomicBool::new(false)));
        Ok(())
    }

    /// Serve on a background thread.
    pub fn spawn(self) -> Result<ServerHandle> {
        let addr = self.local_addr()?;
        let hub = self.hub();
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let thread = thread::spawn(move || self.accept_loop(flag));
        Ok(ServerHandle { addr, hub, stop, thread: Some(thread) })
    }
}

pub struct ServerHandle {
    pub addr: SocketAddr,
    pub hub: SharedHub,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn shutdown(mut self) {
        self.stop_inner();
    }

    fn stop_inner(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_inner();
    }
}

/// Tell a WebSocket handshake from raw NDJSON by the first bytes. Browsers
/// send the request line at once, so a client that stays silent for
/// `SNIFF_WINDOW` is a raw listener (a mock robot, say).
fn sniff_websocket(stream: &TcpStream) -> io::Result<bool> {
    const GET: &[u8] = b"GET ";
    let deadline = Instant::now() + SNIFF_WINDOW;
    let mut buf = [0u8; 4];
    loop {
        let Some(left) = deadline.checked_duration_since(Instant::now()).filter(|d| !d.is_zero()) else {
            return Ok(false);
        };
        stream.set_read_timeout(Some(left))?;
        let n = match stream.peek(&mut buf) {
            Ok(n) => n,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => return Ok(false),
            Err(e) => return Err(e),
        };
        if n == 0 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        if !GET.starts_with(&buf[..n]) {
            return Ok(false);
        }
        if n == GET.len() {
            return Ok(true);
        }
        thread::sleep(Duration::from_millis(2));
    }
}

struct Registration<'a> {
    hub: &'a SharedHub,
    id: ClientId,
}

impl Drop for Registration<'_> {
    fn drop(&mut self) {
        lock(self.hub).disconnect(self.id);
    }
}

fn serve_connection(stream: TcpStream, hub: &SharedHub) -> Result<()> {
    stream.set_nodelay(true)?;
    if sniff_websocket(&stream)? {
        serve_websocket(stream, hub)
    } else {
        stream.set_read_timeout(None)?;
        serve_raw(stream, hub)
    }
}

fn serve_raw(stream: TcpStream, hub: &SharedHub) -> Result<()> {
    let (id, rx) = lock(hub).connect();
    let _reg = Registration { hub, id };
    let mut writer = stream.try_clone()?;
    let closer = stream.try_clone()?;
    thread::spawn(move || {
        for line in rx {
            if writer.write_all(line.as_bytes()).and_then(|_| writer.write_all(b"\n")).is_err() {
                break;
            }
        }
        let _ = closer.shutdown(Shutdown::Both);
    });
    let mut reader = BufReader::new(stream);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let line = String::from_utf8_lossy(&buf);
        lock(hub).handle_line(id, &line);
    }
}

fn serve_websocket(stream: TcpStream, hub: &SharedHub) -> Result<()> {
    stream.set_read_timeout(Some(HANDSHAKE_TIMEOUT))?;
    let mut ws = tungstenite::accept(stream).map_err(|e| Error::Usage(format!("websocket handshake: {e}")))?;
    ws.get_ref().set_read_timeout(Some(WS_POLL))?;
    let (id, rx) = lock(hub).connect();
    let _reg = Registration { hub, id };
    loop {
        match ws.read() {
            Ok(Message::Text(t)) => {
                let mut h = lock(hub);
                for line in t.as_str().lines() {
                    h.handle_line(id, line);
                }
            }
            Ok(Message::Binary(b)) => {
                let text = String::from_utf8_lossy(&b).into_owned();
                let mut h = lock(hub);
                for line in text.lines() {
                    h.handle_line(id, line);
                }
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e.into()),
        }
        for line in rx.try_iter() {
            ws.send(Message::text(line))?;
        }
    }
}

/// Result of `bridge send`.
#[derive(Debug, Clone, PartialEq)]
pub enum SendOutcome {
    Emitted(Command),
    Suppressed,
    /// No confirmation before the timeout.
    Unconfirmed,
}

/// Line-oriented client connection to a bridge.
pub struct BridgeClient {
    stream: TcpStream,
    reader: BufReader<TcpStream>,
    /// Bytes of a line cut short by a read timeout.
    partial: Vec<u8>,
    eof: bool,
}

impl BridgeClient {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(Self { stream, reader, partial: Vec::new(), eof: false })
    }

    pub fn send_line(&mut self, line: &str) -> Result<()> {
        self.stream.write_all(line.as_bytes())?;
        self.stream.write_all(b"\n")?;
        Ok(())
    }

    pub fn send_bytes(&mut self, bytes: &[u8]) -> Result<()> {
        self.stream.write_all(bytes)?;
        Ok(())
    }

    /// Next line, or `None` on timeout or end of stream.
    pub fn read_line(&mut self, timeout: Duration) -> Result<Option<String>> {
        self.stream.set_read_timeout(Some(timeout.max(Duration::from_millis(1))))?;
        match self.reader.read_until(b'\n', &mut self.partial) {
            Ok(0) => {
                self.eof = true;
                Ok(None)
            }
            Ok(_) if self.partial.last() != Some(&b'\n') => {
                self.eof = true;
                Ok(None)
            }
            Ok(_) => {
                let line = String::from_utf8_lossy(&self.partial).trim_end().to_owned();
                self.partial.clear();
                Ok(Some(line))
            }
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Whether the bridge closed the connection.
    pub fn closed(&self) -> bool {
        self.eof
    }

    /// Read lines until `pick` accepts one or `timeout` passes.
    pub fn wait_for<T>(&mut self, timeout: Duration, mut pick: impl FnMut(&str) -> Option<T>) -> Result<Option<T>> {
        let deadline = Instant::now() + timeout;
        while let Some(left) = deadline.checked_duration_since(Instant::now()) {
            if let Some(l) = self.read_line(left)? {
                if let Some(v) = pick(&l) {
                    return Ok(Some(v));
                }
            } else if self.eof {
                break;
            }
        }
        Ok(None)
    }

    pub fn status(&mut self, timeout: Duration) -> Result<Option<Status>> {
        self.send_line("STATUS")?;
        self.wait_for(timeout, |l| serde_json::from_str::<Status>(l).ok())
    }

    /// Inject a command and wait for the bridge to emit or suppress it.
    pub fn send_command(&mut self, kind: CommandKind, timeout: Duration) -> Result<SendOutcome> {
        let line = serde_json::json!({ "seq": 0, "t_ms": 0, "cmd": kind }).to_string();
        self.send_line(&line)?;
        let got = self.wait_for(timeout, |l| {
            if let Ok(c) = serde_json::from_str::<Command>(l) {
                return (c.kind == kind).then_some(SendOutcome::Emitted(c));
            }
            match serde_json::from_str::<Suppressed>(l) {
                Ok(s) if s.suppressed == kind => Some(SendOutcome::Suppressed),
                _ => None,
            }
        })?;
        Ok(got.unwrap_or(SendOutcome::Unconfirmed))
    }

    pub fn into_stream(self) -> TcpStream {
        self.stream
    }
}

/// Drain whatever is readable within `timeout` (used by tests and tools).
pub fn read_available(stream: &mut TcpStream, timeout: Duration) -> io::Result<Vec<u8>> {
    stream.set_read_timeout(Some(timeout))?;
    let mut out = Vec::new();
    let mut buf = [0u8; 4096];
    loop {
        match stream.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => out.extend_from_slice(&buf[..n]),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
