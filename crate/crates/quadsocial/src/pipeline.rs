//! Offline wiring of the full loop: landmark frames through the classifier
//! and bridge gate into the mock robot, without sockets.

use quadsocial_core::actuator::{Actuator, ActuatorConfig};
use quadsocial_core::landmark::{serialize_frame, Frame};
use quadsocial_core::model::{compose_gesture, execute_gesture, GestureKind, GestureParams, ModelContext, StagePoses};
use quadsocial_core::synth::FRAME_MS;

use crate::hub::Hub;
use crate::robot::Applied;
use crate::Result;

/// Build an actuator with every gesture the available stage poses allow.
pub fn build_actuator(ctx: &ModelContext, cfg: ActuatorConfig, poses: &StagePoses, params: &GestureParams) -> Result<Actuator> {
    let mut a = Actuator::new(&ctx.geometry, cfg);
    for kind in GestureKind::ALL {
        let Ok(traj) = compose_gesture(kind, poses, params, ctx) else { continue };
        let run = execute_gesture(&traj, ctx)?;
        if run.completed() {
            a.load_gesture(kind.command(), run.states);
        } else {
            tracing::warn!(?kind, reason = ?run.terminated, "gesture not loaded");
        }
    }
    Ok(a)
}

/// Join clips into one stream with continuous timestamps.
pub fn concat_clips(clips: &[Vec<Frame>]) -> Vec<Frame> {
    let mut out = Vec::new();
    let mut t0 = 0;
    for clip in clips {
        let start = clip.first().map_or(0, |f| f.t_ms);
        for f in clip {
            let mut f = f.clone();
            let t = t0 + (f.t_ms - start);
            f.t_ms = t;
            if let Some(h) = f.hand.as_mut() {
                h.t_ms = t;
            }
            if let Some(face) = f.face.as_mut() {
                face.t_ms = t;
            }
            out.push(f);
        }
        t0 = out.last().map_or(0, |f| f.t_ms + FRAME_MS);
    }
    out
}

/// Feed `frames` through a hub and apply every emitted command to
/// `actuator`, ticking it along with the frame clock.
pub fn replay(frames: &[Frame], hub: &mut Hub, actuator: &mut Actuator) -> Vec<Applied> {
    let (source, _source_rx) = hub.connect();
    let (_robot, robot_rx) = hub.connect();
    let tick = actuator.cfg.tick_ms.max(1);
    let mut applied = Vec::new();
    for f in frames {
        while actuator.state().t_ms + tick <= f.t_ms {
            actuator.tick();
        }
        hub.handle_line_at(source, &serialize_frame(f), f.t_ms);
        for line in robot_rx.try_iter() {
            let Ok(cmd) = serde_json::from_str(&line) else { continue };
            let result = actuator.apply_command(&cmd);
            applied.push(Applied { cmd, result, state: actuator.state().clone() });
        }
    }
    applied
}
