//! Deterministic synthetic landmark clips.
//!
//! Hands are built from a small 3-D skeleton (palm in the `xy` plane, fingers
//! curling toward the camera), viewed with a random yaw, rolled in the image
//! plane, scaled and placed. Heads are a nose/jaw pair driven by sinusoids.
//! Used to build labelled corpora and test fixtures.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classifier::Gesture;
use crate::landmark::{FaceFrame, Frame, HandFrame, Landmark, HAND_POINTS};

/// Frame period of generated clips (30 fps).
pub const FRAME_MS: u64 = 33;

type P3 = [f64; 3];

// Palm layout in skeleton units (wrist at origin, y up, z toward camera).
const MCP: [[f64; 2]; 4] = [[-0.25, 1.0], [-0.05, 1.05], [0.15, 1.0], [0.33, 0.9]];
const SEGMENTS: [[f64; 3]; 4] = [[0.45, 0.27, 0.22], [0.5, 0.3, 0.24], [0.46, 0.28, 0.22], [0.36, 0.22, 0.2]];
const THUMB_CMC: P3 = [-0.2, 0.18, 0.0];
const THUMB_SEGMENTS: [f64; 3] = [0.3, 0.25, 0.22];

#[derive(Debug, Clone, Copy)]
struct FingerPose {
    spread_deg: f64,
    /// Flexion at MCP, PIP and DIP (degrees); the finger curls toward +z.
    flex_deg: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
enum ThumbPose {
    /// Straight thumb pointing `dir_deg` from +y (negative = toward -x).
    Extended { dir_deg: f64 },
    /// Thumb folded across the curled fingers.
    Tucked,
}

#[derive(Debug, Clone, Copy)]
struct HandPose {
    fingers: [FingerPose; 4],
    thumb: ThumbPose,
    yaw_deg: f64,
    roll_deg: f64,
    scale: f64,
    center: [f64; 2],
}

fn finger_points(base: [f64; 2], seg: [f64; 3], pose: FingerPose) -> [P3; 4] {
    let s = pose.spread_deg.to_radians();
    let dir = [s.sin(), s.cos()];
    let mut p = [base[0], base[1], 0.0];
    let mut out = [p; 4];
    let mut phi = 0.0f64;
    for k in 0..3 {
        phi += pose.flex_deg[k].to_radians();
        p = [
            p[0] + seg[k] * phi.cos() * dir[0],
            p[1] + seg[k] * phi.cos() * dir[1],
            p[2] + seg[k] * phi.sin(),
        ];
        out[k + 1] = p;
    }
    out
}

fn skeleton(pose: &HandPose) -> [P3; HAND_POINTS] {
    let mut pts = [[0.0; 3]; HAND_POINTS];
    pts[0] = [0.0, 0.0, 0.0];
    pts[1] = THUMB_CMC;
    match pose.thumb {
        ThumbPose::Extended { dir_deg } => {
            let a = dir_deg.to_radians();
            let d = [a.sin(), a.cos()];
            let mut p = THUMB_CMC;
            for (k, len) in THUMB_SEGMENTS.iter().enumerate() {
                p = [p[0] + len * d[0], p[1] + len * d[1], 0.02 * (k as f64 + 1.0)];
                pts[2 + k] = p;
            }
        }
        ThumbPose::Tucked => {
            pts[2] = [-0.22, 0.42, 0.1];
            pts[3] = [-0.1, 0.6, 0.2];
            pts[4] = [0.03, 0.74, 0.22];
        }
    }
    for f in 0..4 {
        let chain = finger_points(MCP[f], SEGMENTS[f], pose.fingers[f]);
        for (k, p) in chain.iter().enumerate() {
            pts[5 + 4 * f + k] = *p;
        }
    }
    pts
}

fn project(pose: &HandPose, pts: &[P3; HAND_POINTS]) -> [Landmark; HAND_POINTS] {
    let (sy, cy) = pose.yaw_deg.to_radians().sin_cos();
    let (sr, cr) = pose.roll_deg.to_radians().sin_cos();
    let mut out = [Landmark::default(); HAND_POINTS];
    for (o, p) in out.iter_mut().zip(pts.iter()) {
        // yaw about the vertical axis, orthographic projection
        let x = p[0] * cy + p[2] * sy;
        let z = -p[0] * sy + p[2] * cy;
        let y = p[1];
        // in-plane roll
        let xr = x * cr - y * sr;
        let yr = x * sr + y * cr;
        // image: y grows downward
        *o = Landmark::with_z(
            pose.center[0] + pose.scale * xr,
            pose.center[1] - pose.scale * yr,
            pose.scale * z,
        );
    }
    out
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn curled(rng: &mut ChaCha8Rng, spread: f64) -> FingerPose {
    FingerPose {
        spread_deg: spread,
        flex_deg: [uniform(rng, 62.0, 78.0), uniform(rng, 104.0, 116.0), uniform(rng, 52.0, 68.0)],
    }
}

fn straight(rng: &mut ChaCha8Rng, spread: f64) -> FingerPose {
    FingerPose {
        spread_deg: spread,
        flex_deg: [uniform(rng, 0.0, 8.0), uniform(rng, 0.0, 10.0), uniform(rng, 0.0, 8.0)],
    }
}

fn sample_pose(gesture: Gesture, rng: &mut ChaCha8Rng) -> HandPose {
    let tight = [-3.0, -1.0, 1.0, 3.0];
    let mut fingers = [FingerPose { spread_deg: 0.0, flex_deg: [0.0; 3] }; 4];
    for (f, s) in fingers.iter_mut().zip(tight) {
        *f = curled(rng, s);
    }
    let thumb_dir = uniform(rng, -42.0, -30.0);
    let (thumb, yaw, roll) = match gesture {
        Gesture::OpenPalm => {
            let spread = [-12.0, -3.0, 6.0, 15.0];
            for (f, s) in fingers.iter_mut().zip(spread) {
                let spread = s + uniform(rng, -2.0, 2.0);
                *f = straight(rng, spread);
            }
            (ThumbPose::Extended { dir_deg: thumb_dir - 10.0 }, uniform(rng, -20.0, 20.0), uniform(rng, -12.0, 12.0))
        }
        Gesture::Fist => (ThumbPose::Tucked, uniform(rng, -10.0, 10.0), uniform(rng, -12.0, 12.0)),
        Gesture::PointingUp => {
            let spread = uniform(rng, -4.0, 2.0);
            fingers[0] = straight(rng, spread);
            (ThumbPose::Tucked, uniform(rng, -15.0, 15.0), uniform(rng, -10.0, 10.0))
        }
        Gesture::ThumbUp => {
            // roll the hand so the thumb points roughly straight up
            (ThumbPose::Extended { dir_deg: thumb_dir }, uniform(rng, -15.0, 15.0), thumb_dir + uniform(rng, -10.0, 10.0))
        }
        Gesture::ThumbDown => (
            ThumbPose::Extended { dir_deg: thumb_dir },
            uniform(rng, -15.0, 15.0),
            180.0 + thumb_dir + uniform(rng, -10.0, 10.0),
        ),
        Gesture::Nod | Gesture::Shake => (ThumbPose::Tucked, 0.0, 0.0),
    };
    HandPose {
        fingers,
        thumb,
        yaw_deg: yaw,
        roll_deg: roll,
        scale: uniform(rng, 0.15, 0.24),
        center: [uniform(rng, 0.35, 0.65), uniform(rng, 0.4, 0.6)],
    }
}

/// A single synthetic hand frame for `gesture` (which must be a hand gesture).
pub fn hand_frame(gesture: Gesture, seed: u64, t_ms: u64) -> HandFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pose = sample_pose(gesture, &mut rng);
    HandFrame { t_ms, points: project(&pose, &skeleton(&pose)) }
}

/// A clip of `frames` frames: one sampled pose with slow drift and a little
/// per-frame tremor (in bounding-box units).
pub fn hand_clip(gesture: Gesture, seed: u64, frames: usize) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = sample_pose(gesture, &mut rng);
    let skel = skeleton(&base);
    let drift = [uniform(&mut rng, -0.002, 0.002), uniform(&mut rng, -0.002, 0.002)];
    let tremor = Normal::new(0.0, 0.002).expect("valid sigma");
    (0..frames)
        .map(|k| {
            let mut pose = base;
            pose.center[0] += drift[0] * k as f64;
            pose.center[1] += drift[1] * k as f64;
            let mut points = project(&pose, &skel);
            let width = pose.scale;
            for p in points.iter_mut() {
                p.x += width * tremor.sample(&mut rng);
                p.y += width * tremor.sample(&mut rng);
            }
            let t_ms = k as u64 * FRAME_MS;
            Frame { t_ms, hand: Some(HandFrame { t_ms, points }), face: None }
        })
        .collect()
}

/// Nod (nose `y` oscillation) or shake (jaw `x` oscillation) clip.
pub fn head_clip(gesture: Gesture, seed: u64, frames: usize) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = uniform(&mut rng, 0.03, 0.05);
    let period_ms = uniform(&mut rng, 220.0, 300.0);
    let phase = uniform(&mut rng, 0.0, 2.0 * PI);
    let nose0 = [uniform(&mut rng, 0.4, 0.6), uniform(&mut rng, 0.35, 0.5)];
    let face_h = uniform(&mut rng, 0.15, 0.22);
    let tremor = Normal::new(0.0, 0.0005).expect("valid sigma");
    (0..frames)
        .map(|k| {
            let t_ms = k as u64 * FRAME_MS;
            let s = amp * (2.0 * PI * t_ms as f64 / period_ms + phase).sin();
            let (dy, dx) = match gesture {
                Gesture::Nod => (s, 0.0),
                Gesture::Shake => (0.0, s),
                _ => (0.0, 0.0),
            };
            let nose = Landmark::new(
                nose0[0] + 0.6 * dx + tremor.sample(&mut rng),
                nose0[1] + dy + tremor.sample(&mut rng),
            );
            let jaw = Landmark::new(
                nose0[0] + dx + tremor.sample(&mut rng),
                nose0[1] + face_h + 0.8 * dy + tremor.sample(&mut rng),
            );
            Frame { t_ms, hand: None, face: Some(FaceFrame { t_ms, nose, jaw }) }
        })
        .collect()
}

/// Clip for any gesture, hand or head.
pub fn clip(gesture: Gesture, seed: u64, frames: usize) -> Vec<Frame> {
    if gesture.is_head() {
        head_clip(gesture, seed, frames)
    } else {
        hand_clip(gesture, seed, frames)
    }
}

/// Add zero-mean Gaussian noise to every landmark. Hand noise is expressed
/// in bounding-box units (scaled by each frame's hand width); face noise is
/// in normalized image units.
pub fn perturb(frames: &[Frame], sigma: f64, seed: u64) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid sigma");
    frames
        .iter()
        .map(|f| {
            let mut f = f.clone();
            if let Some(hand) = f.hand.as_mut() {
                let (lo, hi) = hand
                    .points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.x), hi.max(p.x)));
                let s = sigma * (hi - lo);
                for p in hand.points.iter_mut() {
                    p.x += s * noise.sample(&mut rng);
                    p.y += s * noise.sample(&mut rng);
                }
            }
            if let Some(face) = f.face.as_mut() {
                for lm in [&mut face.nose, &mut face.jaw] {
                    lm.x += sigma * noise.sample(&mut rng);
                    lm.y += sigma * noise.sample(&mut rng);
                }
            }
            f
        })
        .collect()
}
