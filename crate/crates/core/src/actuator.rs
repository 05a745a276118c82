//! Mock quadruped endpoint.
//!
//! High-level commands (walk, speed, stop, stand/sit) drive a kinematic
//! state machine; gesture commands replay pre-scheduled joint trajectories
//! through the quasi-static model. [`run_schedule`] turns a pose trajectory
//! into the settle, active, return sequence actually sent to the joints.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::bridge::{Command, CommandKind};
use crate::classifier::ema;
use crate::model::{simulate_pose, RobotGeometry};
use crate::reward::QuadState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SafetyLimits {
    pub max_tilt: f64,
    pub min_height: f64,
    pub max_height: f64,
}

impl Default for SafetyLimits {
    fn default() -> Self {
        Self { max_tilt: 0.4, min_height: 0.15, max_height: 0.45 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminateReason {
    Roll,
    Pitch,
    Height,
    SelfCollision,
    /// The pose could not rest on three feet (reported by the model, not
    /// by [`safety_check`]).
    Fell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Ok,
    Terminate(TerminateReason),
}

impl Verdict {
    pub fn is_ok(self) -> bool {
        self == Verdict::Ok
    }
}

pub fn safety_check(body: &QuadState, limits: &SafetyLimits) -> Verdict {
    let (roll, pitch) = body.roll_pitch();
    if !(roll.abs() <= limits.max_tilt) {
        return Verdict::Terminate(TerminateReason::Roll);
    }
    if !(pitch.abs() <= limits.max_tilt) {
        return Verdict::Terminate(TerminateReason::Pitch);
    }
    let h = body.height();
    if !(h >= limits.min_height && h <= limits.max_height) {
        return Verdict::Terminate(TerminateReason::Height);
    }
    if body.self_collision {
        return Verdict::Terminate(TerminateReason::SelfCollision);
    }
    Verdict::Ok
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    /// Maximum per-step joint change (rad).
    pub delta_clamp: f64,
    pub settle_s: f64,
    pub return_s: f64,
    pub rate_hz: f64,
    /// EMA weight of the newest command.
    pub smoothing: f64,
    /// Share of the settle/return window spent interpolating; the rest holds.
    pub ramp_fraction: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { delta_clamp: 0.05, settle_s: 1.0, return_s: 1.0, rate_hz: 20.0, smoothing: 0.5, ramp_fraction: 0.75 }
    }
}

impl ScheduleConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    fn steps(&self, seconds: f64) -> usize {
        (seconds * self.rate_hz).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Settle,
    Active,
    Return,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("trajectory is empty")]
    Empty,
    #[error("non-finite joint target at step {step}")]
    NonFinite { step: usize },
    #[error("invalid schedule config: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledTrajectory {
    /// Pre-filter targets, including the settle and return interpolation.
    pub commanded: Vec<[f64; 12]>,
    /// Smoothed, rate-limited targets sent to the joints.
    pub executed: Vec<[f64; 12]>,
    pub phases: Vec<Phase>,
}

impl ScheduledTrajectory {
    pub fn active_mask(&self) -> Vec<bool> {
        self.phases.iter().map(|p| *p == Phase::Active).collect()
    }
}

fn lerp12(a: &[f64; 12], b: &[f64; 12], s: f64) -> [f64; 12] {
    core::array::from_fn(|i| a[i] + (b[i] - a[i]) * s)
}

fn transition(from: &[f64; 12], to: &[f64; 12], steps: usize, ramp_fraction: f64) -> Vec<[f64; 12]> {
    let ramp = ((steps as f64 * ramp_fraction).round() as usize).clamp(1.min(steps), steps);
    (0..steps)
        .map(|k| if k + 1 >= ramp { *to } else { lerp12(from, to, (k + 1) as f64 / ramp as f64) })
        .collect()
}

/// Wrap a pose trajectory in settle/return phases and pass it through the
/// EMA filter and per-step delta clamp, starting from `nominal`.
pub fn run_schedule(
    trajectory: &[[f64; 12]],
    nominal: &[f64; 12],
    cfg: &ScheduleConfig,
) -> Result<ScheduledTrajectory, TrajectoryError> {
    if trajectory.is_empty() {
        return Err(TrajectoryError::Empty);
    }
    if !(cfg.delta_clamp > 0.0 && cfg.rate_hz > 0.0 && cfg.smoothing > 0.0 && cfg.smoothing <= 1.0) {
        return Err(TrajectoryError::Config("clamp and rate must be positive, smoothing in (0, 1]"));
    }
    if let Some(step) = trajectory.iter().position(|q| q.iter().any(|v| !v.is_finite())) {
        return Err(TrajectoryError::NonFinite { step });
    }
    let first = trajectory[0];
    let last = trajectory[trajectory.len() - 1];
    let settle = transition(nominal, &first, cfg.steps(cfg.settle_s), cfg.ramp_fraction);
    let ret = transition(&last, nominal, cfg.steps(cfg.return_s), cfg.ramp_fraction);

    let mut commanded = Vec::with_capacity(settle.len() + trajectory.len() + ret.len());
    let mut phases = Vec::with_capacity(commanded.capacity());
    for (seg, phase) in [(&settle[..], Phase::Settle), (trajectory, Phase::Active), (&ret[..], Phase::Return)] {
        commanded.extend_from_slice(seg);
        phases.extend(core::iter::repeat_n(phase, seg.len()));
    }

    let mut prev = *nominal;
    let executed = commanded
        .iter()
        .map(|c| {
            for i in 0..12 {
                let smoothed = ema(prev[i], c[i], cfg.smoothing);
                prev[i] += (smoothed - prev[i]).clamp(-cfg.delta_clamp, cfg.delta_clamp);
            }
            prev
        })
        .collect();
    Ok(ScheduledTrajectory { commanded, executed, phases })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Posture {
    Standing,
    Sitting,
    Transitioning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "event")]
pub enum ActuatorEvent {
    TransitionStart { t_ms: u64, target: Posture },
    TransitionEnd { t_ms: u64, posture: Posture },
    MotionStart { t_ms: u64, kind: CommandKind },
    MotionStop { t_ms: u64, kind: CommandKind },
    SafetyStop { t_ms: u64, kind: CommandKind, reason: TerminateReason },
    Rejected { t_ms: u64, kind: CommandKind },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ActuatorError {
    #[error("{kind} rejected: a posture transition is in progress")]
    Busy { kind: CommandKind },
    #[error("{kind} rejected: robot is not standing")]
    NotStanding { kind: CommandKind },
    #[error("no trajectory loaded for {kind}")]
    MissingTrajectory { kind: CommandKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActuatorConfig {
    pub limits: SafetyLimits,
    pub schedule: ScheduleConfig,
    pub transition_ms: u64,
    pub tick_ms: u64,
    /// Base speed per speed level (m/s).
    pub speed_step: f64,
    pub initial_speed_level: u8,
}

impl Default for ActuatorConfig {
    fn default() -> Self {
        Self {
            limits: SafetyLimits::default(),
            schedule: ScheduleConfig::default(),
            transition_ms: 1000,
            tick_ms: 50,
            speed_step: 0.1,
            initial_speed_level: 1,
        }
    }
}

pub const MAX_SPEED_LEVEL: u8 = 5;

/// One telemetry sample, published every tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub t_ms: u64,
    pub posture: Posture,
    pub h: f64,
    pub roll: f64,
    pub pitch: f64,
    pub feet_fz: [f64; 4],
}

/// Snapshot-able state of the mock robot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuatorState {
    pub posture: Posture,
    pub active_motion: Option<CommandKind>,
    pub speed_level: u8,
    pub body: QuadState,
    /// Distance walked along the body x axis (m).
    pub odometry_m: f64,
    pub t_ms: u64,
}

#[derive(Debug, Clone)]
struct Transition {
    target: Posture,
    remaining_ms: u64,
}

#[derive(Debug, Clone)]
pub struct Actuator {
    pub cfg: ActuatorConfig,
    state: ActuatorState,
    transition: Option<Transition>,
    playback: Option<usize>,
    gestures: BTreeMap<CommandKind, Vec<QuadState>>,
    stand: QuadState,
    sit: QuadState,
    events: Vec<ActuatorEvent>,
}

/// Joint offsets of the sitting pose, applied to every leg.
const SIT_OFFSET: [f64; 3] = [0.0, 0.35, -0.7];

impl Actuator {
    pub fn new(geom: &RobotGeometry, cfg: ActuatorConfig) -> Self {
        let qn = geom.q_nominal();
        let stand = simulate_pose(&qn, geom).expect("nominal pose is stable");
        let sit_q: [f64; 12] = core::array::from_fn(|i| qn[i] + SIT_OFFSET[i % 3]);
        let sit = simulate_pose(&sit_q, geom).unwrap_or_else(|_| stand.clone());
        let state = ActuatorState {
            posture: Posture::Standing,
            active_motion: None,
            speed_level: cfg.initial_speed_level.min(MAX_SPEED_LEVEL),
            body: stand.clone(),
            odometry_m: 0.0,
            t_ms: 0,
        };
        Self { cfg, state, transition: None, playback: None, gestures: BTreeMap::new(), stand, sit, events: Vec::new() }
    }

    /// Register the simulated body states replayed for a gesture command.
    pub fn load_gesture(&mut self, kind: CommandKind, states: Vec<QuadState>) {
        self.gestures.insert(kind, states);
    }

    pub fn has_gesture(&self, kind: CommandKind) -> bool {
        self.gestures.contains_key(&kind)
    }

    pub fn state(&self) -> &ActuatorState {
        &self.state
    }

    pub fn events(&self) -> &[ActuatorEvent] {
        &self.events
    }

    fn stop_motion(&mut self) {
        if let Some(kind) = self.state.active_motion.take() {
            self.events.push(ActuatorEvent::MotionStop { t_ms: self.state.t_ms, kind });
        }
        if self.playback.take().is_some() {
            self.state.body = self.stand.clone();
        }
    }

    fn reject(&mut self, err: ActuatorError, kind: CommandKind) -> Result<(), ActuatorError> {
        self.events.push(ActuatorEvent::Rejected { t_ms: self.state.t_ms, kind });
        Err(err)
    }

    pub fn apply_command(&mut self, cmd: &Command) -> Result<(), ActuatorError> {
        let kind = cmd.kind;
        match kind {
            CommandKind::SpeedUp => {
                self.state.speed_level = (self.state.speed_level + 1).min(MAX_SPEED_LEVEL);
            }
            CommandKind::SpeedDown => {
                self.state.speed_level = self.state.speed_level.saturating_sub(1);
            }
            CommandKind::Stop => self.stop_motion(),
            CommandKind::Stand | CommandKind::Sit => {
                if self.state.posture == Posture::Transitioning {
                    return self.reject(ActuatorError::Busy { kind }, kind);
                }
                let target = if kind == CommandKind::Stand { Posture::Standing } else { Posture::Sitting };
                if self.state.posture != target {
                    self.stop_motion();
                    self.state.posture = Posture::Transitioning;
                    self.transition = Some(Transition { target, remaining_ms: self.cfg.transition_ms });
                    self.events.push(ActuatorEvent::TransitionStart { t_ms: self.state.t_ms, target });
                }
            }
            _ => {
                match self.state.posture {
                    Posture::Standing => {}
                    Posture::Transitioning => return self.reject(ActuatorError::Busy { kind }, kind),
                    Posture::Sitting => return self.reject(ActuatorError::NotStanding { kind }, kind),
                }
                let is_gesture = kind.is_social_gesture();
                if is_gesture && !self.gestures.contains_key(&kind) {
                    return self.reject(ActuatorError::MissingTrajectory { kind }, kind);
                }
                self.stop_motion();
                self.state.active_motion = Some(kind);
                self.playback = is_gesture.then_some(0);
                self.events.push(ActuatorEvent::MotionStart { t_ms: self.state.t_ms, kind });
            }
        }
        Ok(())
    }

    /// Advance the loop by one tick and return the telemetry sample.
    pub fn tick(&mut self) -> Telemetry {
        let dt_ms = self.cfg.tick_ms;
        self.state.t_ms += dt_ms;
        let t = self.state.t_ms;

        if let Some(tr) = self.transition.as_mut() {
            tr.remaining_ms = tr.remaining_ms.saturating_sub(dt_ms);
            if tr.remaining_ms == 0 {
                let target = tr.target;
                self.transition = None;
                self.state.posture = target;
                self.state.body = if target == Posture::Sitting { self.sit.clone() } else { self.stand.clone() };
                self.events.push(ActuatorEvent::TransitionEnd { t_ms: t, posture: target });
            }
        }

        match self.state.active_motion {
            Some(CommandKind::MoveFwd) | Some(CommandKind::MoveBwd) => {
                let sign = if self.state.active_motion == Some(CommandKind::MoveFwd) { 1.0 } else { -1.0 };
                let v = self.state.speed_level as f64 * self.cfg.speed_step;
                self.state.odometry_m += sign * v * dt_ms as f64 / 1000.0;
            }
            Some(kind) if kind.is_social_gesture() => self.advance_playback(kind, t),
            _ => {}
        }
        self.telemetry()
    }

    fn advance_playback(&mut self, kind: CommandKind, t: u64) {
        let step = self.playback.unwrap_or(0);
        let Some(body) = self.gestures.get(&kind).and_then(|s| s.get(step)).cloned() else {
            self.stop_motion();
            return;
        };
        if let Verdict::Terminate(reason) = safety_check(&body, &self.cfg.limits) {
            self.events.push(ActuatorEvent::SafetyStop { t_ms: t, kind, reason });
            self.stop_motion();
            return;
        }
        self.state.body = body;
        self.playback = Some(step + 1);
    }

    pub fn telemetry(&self) -> Telemetry {
        let (roll, pitch) = self.state.body.roll_pitch();
        Telemetry {
            t_ms: self.state.t_ms,
            posture: self.state.posture,
            h: self.state.body.height(),
            roll,
            pitch,
            feet_fz: self.state.body.f_z,
        }
    }
}
