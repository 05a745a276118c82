//! Social gestures built from trained stage poses.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::actuator::{run_schedule, ScheduledTrajectory, TerminateReason};
use crate::reward::QuadState;

use super::geometry::mirror_joints;
use super::train::{execute, fl_range, ModelContext, PosePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GestureKind {
    G1,
    G2,
    G3,
    G4,
    G5,
}

impl GestureKind {
    pub const ALL: [GestureKind; 5] = [GestureKind::G1, GestureKind::G2, GestureKind::G3, GestureKind::G4, GestureKind::G5];

    pub fn from_name(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "G1" => Some(Self::G1),
            "G2" => Some(Self::G2),
            "G3" => Some(Self::G3),
            "G4" => Some(Self::G4),
            "G5" => Some(Self::G5),
            _ => None,
        }
    }

    pub fn command(self) -> crate::bridge::CommandKind {
        use crate::bridge::CommandKind as C;
        match self {
            Self::G1 => C::GestureG1,
            Self::G2 => C::GestureG2,
            Self::G3 => C::GestureG3,
            Self::G4 => C::GestureG4,
            Self::G5 => C::GestureG5,
        }
    }

    pub fn from_command(kind: crate::bridge::CommandKind) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.command() == kind)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GestureError {
    #[error("{kind:?} needs a trained stage {stage} checkpoint")]
    MissingCheckpoint { kind: GestureKind, stage: u8 },
}

/// Trained stage poses available to the composer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StagePoses {
    pub stage1: Option<PosePolicy>,
    pub stage2: Option<PosePolicy>,
    pub stage3: Option<PosePolicy>,
}

impl StagePoses {
    fn get(&self, kind: GestureKind, stage: u8) -> Result<&PosePolicy, GestureError> {
        let p = match stage {
            1 => self.stage1.as_ref(),
            2 => self.stage2.as_ref(),
            _ => self.stage3.as_ref(),
        };
        p.ok_or(GestureError::MissingCheckpoint { kind, stage })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GestureParams {
    pub hold_s: f64,
    pub cycles_g4: usize,
    pub lift_s: f64,
    pub rest_s: f64,
    pub cycles_g5: usize,
    pub swing_period_s: f64,
}

impl Default for GestureParams {
    fn default() -> Self {
        Self { hold_s: 5.0, cycles_g4: 15, lift_s: 1.5, rest_s: 1.5, cycles_g5: 31, swing_period_s: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Hold,
    Lift,
    Rest,
    Swing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: usize,
    pub len: usize,
}

/// Active-phase joint targets of a gesture at the schedule rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureTrajectory {
    pub kind: GestureKind,
    pub targets: Vec<[f64; 12]>,
    pub segments: Vec<Segment>,
}

impl GestureTrajectory {
    fn push(&mut self, kind: SegmentKind, steps: impl IntoIterator<Item = [f64; 12]>) {
        let start = self.targets.len();
        self.targets.extend(steps);
        self.segments.push(Segment { kind, start, len: self.targets.len() - start });
    }

    pub fn count(&self, kind: SegmentKind) -> usize {
        self.segments.iter().filter(|s| s.kind == kind).count()
    }

    pub fn mirrored(&self) -> GestureTrajectory {
        GestureTrajectory { kind: self.kind, targets: self.targets.iter().map(mirror_joints).collect(), segments: self.segments.clone() }
    }
}

pub fn compose_gesture(
    kind: GestureKind,
    poses: &StagePoses,
    params: &GestureParams,
    ctx: &ModelContext,
) -> Result<GestureTrajectory, GestureError> {
    let rate = ctx.schedule.rate_hz;
    let steps = |s: f64| ((s * rate).round() as usize).max(1);
    let q = |stage: u8| poses.get(kind, stage).map(|p| ctx.joints(&p.dq));
    let mut t = GestureTrajectory { kind, targets: Vec::new(), segments: Vec::new() };

    match kind {
        GestureKind::G1 => {
            let q2 = q(2)?;
            t.push(SegmentKind::Hold, core::iter::repeat_n(q2, steps(params.hold_s)));
        }
        GestureKind::G2 | GestureKind::G3 => {
            let q3 = q(3)?;
            t.push(SegmentKind::Hold, core::iter::repeat_n(q3, steps(params.hold_s)));
            if kind == GestureKind::G3 {
                t = t.mirrored();
                t.kind = kind;
            }
        }
        GestureKind::G4 => {
            let (q1, q2) = (q(1)?, q(2)?);
            for _ in 0..params.cycles_g4 {
                t.push(SegmentKind::Lift, core::iter::repeat_n(q2, steps(params.lift_s)));
                t.push(SegmentKind::Rest, core::iter::repeat_n(q1, steps(params.rest_s)));
            }
        }
        GestureKind::G5 => {
            let (q2, q3) = (q(2)?, q(3)?);
            t.push(SegmentKind::Lift, core::iter::repeat_n(q2, steps(params.lift_s)));
            let period = steps(params.swing_period_s);
            for _ in 0..params.cycles_g5 {
                let cycle = (0..period).map(|k| {
                    let s = 0.5 * (1.0 - (2.0 * PI * k as f64 / period as f64).cos());
                    let mut out = q2;
                    for i in fl_range() {
                        out[i] = q2[i] + s * (q3[i] - q2[i]);
                    }
                    out
                });
                t.push(SegmentKind::Swing, cycle);
            }
        }
    }
    Ok(t)
}

/// A gesture after scheduling and simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedGesture {
    pub schedule: ScheduledTrajectory,
    pub states: Vec<QuadState>,
    pub terminated: Option<TerminateReason>,
}

impl ExecutedGesture {
    /// Whether the simulated states cover the whole schedule without a
    /// safety stop.
    pub fn completed(&self) -> bool {
        self.terminated.is_none() && self.states.len() == self.schedule.executed.len()
    }
}

/// Schedule a composed gesture from the nominal pose and simulate it.
pub fn execute_gesture(traj: &GestureTrajectory, ctx: &ModelContext) -> Result<ExecutedGesture, crate::actuator::TrajectoryError> {
    let schedule = run_schedule(&traj.targets, &ctx.q_nominal(), &ctx.schedule)?;
    let (states, _, terminated) = execute(&schedule.executed, &schedule.commanded, &schedule.active_mask(), ctx);
    Ok(ExecutedGesture { schedule, states, terminated })
}
