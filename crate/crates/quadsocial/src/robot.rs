//! Mock robot client: executes bridge commands on an [`Actuator`] and
//! publishes one telemetry line per tick.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::ToSocketAddrs;
use std::path::Path;
use std::time::{Duration, Instant};

use tracing::{info, warn};

use quadsocial_core::actuator::{Actuator, ActuatorError, ActuatorState, Telemetry};
use quadsocial_core::bridge::Command;

use crate::server::BridgeClient;
use crate::{io_err, Result};

/// One command as the robot received and applied it.
#[derive(Debug, Clone)]
pub struct Applied {
    pub cmd: Command,
    pub result: Result<(), ActuatorError>,
    pub state: ActuatorState,
}

pub struct RobotSession {
    client: BridgeClient,
    pub actuator: Actuator,
    log: Option<BufWriter<File>>,
    pub applied: Vec<Applied>,
}

impl RobotSession {
    /// Connect and publish the current state at once, so the bridge
    /// registers the robot before any command is due.
    pub fn connect(addr: impl ToSocketAddrs, actuator: Actuator) -> Result<Self> {
        let mut client = BridgeClient::connect(addr)?;
        client.send_line(&serde_json::to_string(&actuator.telemetry()).expect("telemetry serializes"))?;
        Ok(Self { client, actuator, log: None, applied: Vec::new() })
    }

    /// Also append telemetry to an NDJSON file.
    pub fn log_telemetry(&mut self, path: &Path) -> Result<()> {
        self.log = Some(BufWriter::new(File::create(path).map_err(io_err(path))?));
        Ok(())
    }

    /// Apply every command that arrives within `wait`, then tick once and
    /// publish the telemetry sample.
    pub fn step(&mut self, wait: Duration) -> Result<Telemetry> {
        let deadline = Instant::now() + wait;
        while let Some(left) = deadline.checked_duration_since(Instant::now()) {
            let Some(line) = self.client.read_line(left)? else {
                if self.client.closed() {
                    break;
                }
                continue;
            };
            // Everything that is not a command (gesture notices, relayed
            // telemetry, status replies) is ignored.
            let Ok(cmd) = serde_json::from_str::<Command>(&line) else { continue };
            let result = self.actuator.apply_command(&cmd);
            if let Err(e) = &result {
                warn!(error = %e, "command rejected");
            }
            self.applied.push(Applied { cmd, result, state: self.actuator.state().clone() });
        }
        let t = self.actuator.tick();
        let line = serde_json::to_string(&t).expect("telemetry serializes");
        self.client.send_line(&line)?;
        if let Some(log) = self.log.as_mut() {
            writeln!(log, "{line}")?;
            log.flush()?;
        }
        Ok(t)
    }

    /// Run at the actuator's tick rate for `ticks` ticks (forever if `None`)
    /// or until the bridge hangs up.
    pub fn run(&mut self, ticks: Option<usize>) -> Result<()> {
        let period = Duration::from_millis(self.actuator.cfg.tick_ms);
        let mut n = 0;
        while ticks.is_none_or(|t| n < t) && !self.client.closed() {
            self.step(period)?;
            n += 1;
        }
        info!(ticks = n, commands = self.applied.len(), "robot stopped");
        Ok(())
    }
}
