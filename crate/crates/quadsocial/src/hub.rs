//! Transport-independent core of the bridge server: one serialized
//! [`BridgeState`] shared by every connection.
//!
//! Inbound lines are dispatched by shape:
//!
//! | line                         | effect                                        |
//! |------------------------------|-----------------------------------------------|
//! | `STATUS`                     | reply `{"last_cmd":…,"uptime_ms":…}`          |
//! | `{"cmd":"SIT",…}`            | direct command, cooldown-gated, broadcast     |
//! | `{"t_ms":…,"hand":…}` etc.   | landmark frame, classified per connection     |
//! | `{"posture":…,"feet_fz":…}`  | telemetry, relayed to the other connections   |

use std::collections::BTreeMap;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use quadsocial_core::actuator::Telemetry;
use quadsocial_core::bridge::{encode, BridgeState, Command, CommandKind};
use quadsocial_core::classifier::{ClassifierConfig, GestureEvent, StreamClassifier};
use quadsocial_core::landmark::parse_frame;

pub type ClientId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    pub last_cmd: Option<Command>,
    pub uptime_ms: u64,
}

/// A recognized gesture as broadcast to listeners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureNotice {
    pub gesture: quadsocial_core::Gesture,
    pub t_ms: u64,
    pub confidence: f64,
}

/// Reply sent to a `send` client whose command was held back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suppressed {
    pub suppressed: CommandKind,
    pub reason: String,
}

#[derive(Deserialize)]
struct DirectCommand {
    cmd: CommandKind,
}

struct Client {
    tx: Sender<String>,
    classifier: StreamClassifier,
    /// Server time minus frame time, fixed at the first frame.
    offset_ms: Option<i64>,
    lines: usize,
}

pub struct Hub {
    state: BridgeState,
    start: Instant,
    cfg: ClassifierConfig,
    clients: BTreeMap<ClientId, Client>,
    next_id: ClientId,
    emitted: Vec<Command>,
    pub error_count: usize,
}

impl Hub {
    pub fn new(cfg: ClassifierConfig) -> Result<Self, quadsocial_core::classifier::ClassifierError> {
        cfg.validate()?;
        Ok(Self {
            state: BridgeState::new(),
            start: Instant::now(),
            cfg,
            clients: BTreeMap::new(),
            next_id: 0,
            emitted: Vec::new(),
            error_count: 0,
        })
    }

    pub fn uptime_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }

    /// Register a connection. Lines for it (without newline) arrive on the
    /// returned receiver.
    pub fn connect(&mut self) -> (ClientId, Receiver<String>) {
        let (tx, rx) = channel();
        let id = self.next_id;
        self.next_id += 1;
        let classifier = StreamClassifier::new(self.cfg.clone()).expect("validated in Hub::new");
        self.clients.insert(id, Client { tx, classifier, offset_ms: None, lines: 0 });
        (id, rx)
    }

    pub fn disconnect(&mut self, id: ClientId) {
        self.clients.remove(&id);
    }

    pub fn clients(&self) -> usize {
        self.clients.len()
    }

    /// Every command emitted so far, in order.
    pub fn emitted(&self) -> &[Command] {
        &self.emitted
    }

    pub fn status(&self) -> Status {
        Status { last_cmd: self.state.last_cmd, uptime_ms: self.uptime_ms() }
    }

    fn send_to(&mut self, id: ClientId, line: String) {
        if let Some(c) = self.clients.get(&id) {
            let _ = c.tx.send(line);
        }
    }

    fn broadcast(&mut self, line: &str, except: Option<ClientId>) {
        self.clients.retain(|id, c| Some(*id) == except || c.tx.send(line.to_owned()).is_ok());
    }

    fn emit(&mut self, cmd: Command) {
        debug!(seq = cmd.seq, cmd = %cmd.kind, "emit");
        self.emitted.push(cmd);
        let mut line = encode(&cmd);
        line.pop();
        self.broadcast(&String::from_utf8(line).expect("json is utf-8"), None);
    }

    pub fn handle_line(&mut self, id: ClientId, line: &str) {
        let now = self.uptime_ms();
        self.handle_line_at(id, line, now);
    }

    /// Handle one inbound line with the server clock at `now_ms`.
    pub fn handle_line_at(&mut self, id: ClientId, line: &str, now_ms: u64) {
        let line = line.trim();
        if line.is_empty() {
            return;
        }
        let lineno = match self.clients.get_mut(&id) {
            Some(c) => {
                c.lines += 1;
                c.lines
            }
            None => return,
        };
        if line.eq_ignore_ascii_case("STATUS") {
            let s = Status { last_cmd: self.state.last_cmd, uptime_ms: now_ms };
            self.send_to(id, serde_json::to_string(&s).expect("status serializes"));
            return;
        }
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return self.reject(id, line, &e.to_string()),
        };
        let Some(obj) = value.as_object() else {
            return self.reject(id, line, "not a JSON object");
        };
        if obj.contains_key("cmd") {
            match serde_json::from_value::<DirectCommand>(value) {
                Ok(d) => self.direct(id, d.cmd, now_ms),
                Err(e) => self.reject(id, line, &e.to_string()),
            }
        } else if obj.contains_key("posture") {
            match serde_json::from_value::<Telemetry>(value) {
                Ok(_) => self.broadcast(line, Some(id)),
                Err(e) => self.reject(id, line, &e.to_string()),
            }
        } else {
            match parse_frame(line, lineno) {
                Ok(frame) => self.frame(id, &frame, now_ms),
                Err(e) => self.reject(id, line, &e.to_string()),
            }
        }
    }

    fn reject(&mut self, id: ClientId, line: &str, reason: &str) {
        self.error_count += 1;
        warn!(client = id, reason, line = %line.chars().take(80).collect::<String>(), "skipped line");
    }

    fn direct(&mut self, id: ClientId, kind: CommandKind, now_ms: u64) {
        match self.state.gate_direct(kind, now_ms) {
            Some(cmd) => self.emit(cmd),
            None => {
                let s = Suppressed { suppressed: kind, reason: "cooldown".into() };
                self.send_to(id, serde_json::to_string(&s).expect("serializes"));
            }
        }
    }

    fn frame(&mut self, id: ClientId, frame: &quadsocial_core::Frame, now_ms: u64) {
        let Some(c) = self.clients.get_mut(&id) else { return };
        let offset = *c.offset_ms.get_or_insert(now_ms as i64 - frame.t_ms as i64);
        let ev = match c.classifier.push(frame) {
            Ok(ev) => ev,
            Err(e) => return self.reject(id, "", &e.to_string()),
        };
        let Some(ev) = ev else { return };
        let t_ms = (ev.t_ms as i64 + offset).max(0) as u64;
        let notice = GestureNotice { gesture: ev.gesture, t_ms, confidence: ev.confidence };
        self.broadcast(&serde_json::to_string(&notice).expect("serializes"), None);
        if let Some(cmd) = self.state.gate_emit(&GestureEvent { t_ms, ..ev }) {
            self.emit(cmd);
        }
    }
}
