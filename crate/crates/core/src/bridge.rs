//! Gesture-to-command mapping, duplicate/cooldown gating, and the NDJSON
//! command framing used on the wire.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{Gesture, GestureEvent};

/// Minimum spacing between two emissions of the same command kind.
pub const COOLDOWN_MS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CommandKind {
    MoveFwd,
    MoveBwd,
    SpeedUp,
    SpeedDown,
    Stop,
    Stand,
    Sit,
    #[serde(rename = "GESTURE_G1")]
    GestureG1,
    #[serde(rename = "GESTURE_G2")]
    GestureG2,
    #[serde(rename = "GESTURE_G3")]
    GestureG3,
    #[serde(rename = "GESTURE_G4")]
    GestureG4,
    #[serde(rename = "GESTURE_G5")]
    GestureG5,
}

impl CommandKind {
    pub const ALL: [CommandKind; 12] = [
        CommandKind::MoveFwd,
        CommandKind::MoveBwd,
        CommandKind::SpeedUp,
        CommandKind::SpeedDown,
        CommandKind::Stop,
        CommandKind::Stand,
        CommandKind::Sit,
        CommandKind::GestureG1,
        CommandKind::GestureG2,
        CommandKind::GestureG3,
        CommandKind::GestureG4,
        CommandKind::GestureG5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::MoveFwd => "MOVE_FWD",
            CommandKind::MoveBwd => "MOVE_BWD",
            CommandKind::SpeedUp => "SPEED_UP",
            CommandKind::SpeedDown => "SPEED_DOWN",
            CommandKind::Stop => "STOP",
            CommandKind::Stand => "STAND",
            CommandKind::Sit => "SIT",
            CommandKind::GestureG1 => "GESTURE_G1",
            CommandKind::GestureG2 => "GESTURE_G2",
            CommandKind::GestureG3 => "GESTURE_G3",
            CommandKind::GestureG4 => "GESTURE_G4",
            CommandKind::GestureG5 => "GESTURE_G5",
        }
    }

    pub fn is_social_gesture(self) -> bool {
        matches!(
            self,
            CommandKind::GestureG1
                | CommandKind::GestureG2
                | CommandKind::GestureG3
                | CommandKind::GestureG4
                | CommandKind::GestureG5
        )
    }

    /// Continuous motions preempt each other on the actuator.
    pub fn is_continuous(self) -> bool {
        matches!(self, CommandKind::MoveFwd | CommandKind::MoveBwd) || self.is_social_gesture()
    }
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownCommand(pub String);

impl fmt::Display for UnknownCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown command {:?}", self.0)
    }
}

impl FromStr for CommandKind {
    type Err = UnknownCommand;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CommandKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownCommand(s.into()))
    }
}

/// A command as framed on the wire: `{"seq":n,"t_ms":t,"cmd":"MOVE_FWD"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Command {
    pub seq: u64,
    pub t_ms: u64,
    #[serde(rename = "cmd")]
    pub kind: CommandKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlPath {
    HighLevel,
    LowLevel,
}

/// Gesture to command kind.
pub fn map_gesture(g: Gesture) -> CommandKind {
    match g {
        Gesture::OpenPalm => CommandKind::MoveFwd,
        Gesture::Fist => CommandKind::MoveBwd,
        Gesture::ThumbUp => CommandKind::SpeedUp,
        Gesture::ThumbDown => CommandKind::SpeedDown,
        Gesture::PointingUp => CommandKind::Stop,
        Gesture::Nod => CommandKind::Stand,
        Gesture::Shake => CommandKind::Sit,
    }
}

/// Inverse of [`map_gesture`] for the seven user-triggerable kinds.
pub fn gesture_for(kind: CommandKind) -> Option<Gesture> {
    Gesture::ALL.into_iter().find(|g| map_gesture(*g) == kind)
}

/// Social gestures go to the joint-level controller, everything else to
/// the high-level API.
pub fn route(cmd: &Command) -> ControlPath {
    route_kind(cmd.kind)
}

pub fn route_kind(kind: CommandKind) -> ControlPath {
    if kind.is_social_gesture() {
        ControlPath::LowLevel
    } else {
        ControlPath::HighLevel
    }
}

/// Duplicate-prevention state. The cooldown is tracked per command kind.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeState {
    pub last_gesture: Option<Gesture>,
    pub last_emit_ms: BTreeMap<CommandKind, u64>,
    pub cooldown_ms: u64,
    next_seq: u64,
    pub last_cmd: Option<Command>,
}

impl Default for BridgeState {
    fn default() -> Self {
        Self::new()
    }
}

impl BridgeState {
    pub fn new() -> Self {
        Self {
            last_gesture: None,
            last_emit_ms: BTreeMap::new(),
            cooldown_ms: COOLDOWN_MS,
            next_seq: 0,
            last_cmd: None,
        }
    }

    fn cooled(&self, kind: CommandKind, t_ms: u64) -> bool {
        match self.last_emit_ms.get(&kind) {
            None => true,
            Some(&last) => t_ms.saturating_sub(last) >= self.cooldown_ms && t_ms >= last,
        }
    }

    fn stamp(&mut self, kind: CommandKind, t_ms: u64) -> Command {
        let cmd = Command { seq: self.next_seq, t_ms, kind };
        self.next_seq += 1;
        self.last_emit_ms.insert(kind, t_ms);
        self.last_cmd = Some(cmd);
        cmd
    }

    /// Emit a command for `ev` iff the gesture changed and its command kind
    /// is outside its cooldown. Both records update only on emission.
    pub fn gate_emit(&mut self, ev: &GestureEvent) -> Option<Command> {
        if self.last_gesture == Some(ev.gesture) {
            return None;
        }
        let kind = map_gesture(ev.gesture);
        if !self.cooled(kind, ev.t_ms) {
            return None;
        }
        self.last_gesture = Some(ev.gesture);
        Some(self.stamp(kind, ev.t_ms))
    }

    /// Direct command injection (console buttons, `send`): cooldown only.
    pub fn gate_direct(&mut self, kind: CommandKind, t_ms: u64) -> Option<Command> {
        if !self.cooled(kind, t_ms) {
            return None;
        }
        Some(self.stamp(kind, t_ms))
    }
}

/// Free-function form of [`BridgeState::gate_emit`].
pub fn gate_emit(state: &mut BridgeState, ev: &GestureEvent) -> Option<Command> {
    state.gate_emit(ev)
}

/// One NDJSON line including the trailing newline.
pub fn encode(cmd: &Command) -> Vec<u8> {
    let mut out = serde_json::to_vec(cmd).expect("command serialization is infallible");
    out.push(b'\n');
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad frame {line:?}: {reason}")]
pub struct FrameError {
    pub line: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decoded<'a> {
    pub commands: Vec<Command>,
    /// Bytes after the last newline; feed them again with the next chunk.
    pub remainder: &'a [u8],
    /// Complete lines that could not be parsed; they are skipped.
    pub errors: Vec<FrameError>,
}

/// Parse every complete line of `buffer`. Blank lines are ignored.
pub fn decode(buffer: &[u8]) -> Decoded<'_> {
    let mut out = Decoded::default();
    let mut start = 0;
    for (i, b) in buffer.iter().enumerate() {
        if *b != b'\n' {
            continue;
        }
        let line = &buffer[start..i];
        start = i + 1;
        match decode_line(line) {
            Ok(Some(c)) => out.commands.push(c),
            Ok(None) => {}
            Err(e) => out.errors.push(e),
        }
    }
    out.remainder = &buffer[start..];
    out
}

fn decode_line(line: &[u8]) -> Result<Option<Command>, FrameError> {
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    if line.iter().all(u8::is_ascii_whitespace) {
        return Ok(None);
    }
    serde_json::from_slice::<Command>(line).map(Some).map_err(|e| FrameError {
        line: String::from_utf8_lossy(line).into_owned(),
        reason: alloc::format!("{e}"),
    })
}

/// Streaming wrapper around [`decode`] that owns the partial-line buffer.
#[derive(Debug, Clone, Default)]
pub struct CommandDecoder {
    pending: Vec<u8>,
    pub error_count: usize,
}

impl CommandDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, chunk: &[u8]) -> Vec<Command> {
        self.pending.extend_from_slice(chunk);
        let decoded = decode(&self.pending);
        self.error_count += decoded.errors.len();
        let consumed = self.pending.len() - decoded.remainder.len();
        let commands = decoded.commands;
        self.pending.drain(..consumed);
        commands
    }

    pub fn pending(&self) -> &[u8] {
        &self.pending
    }
}
