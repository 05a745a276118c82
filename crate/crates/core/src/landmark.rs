//! Hand and face landmark samples, the NDJSON replay format, and the
//! geometric primitives the classifier builds on.
//!
//! Coordinates are normalized image coordinates: origin top-left, `y`
//! increasing downward. "Above" therefore means a *smaller* `y`.

use alloc::string::String;
use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::{cross2, dot2, norm2, sub2};

/// Number of keypoints in the standard hand layout.
pub const HAND_POINTS: usize = 21;

/// Replay frames whose `x` or `y` fall outside this band are rejected.
pub const COORD_MIN: f64 = -0.5;
pub const COORD_MAX: f64 = 1.5;

/// Minimum usable hand bounding-box width (normalized image units).
pub const MIN_BBOX_WIDTH: f64 = 1e-4;

/// Indices into the 21-point hand layout.
pub mod idx {
    pub const WRIST: usize = 0;
    pub const THUMB_CMC: usize = 1;
    pub const THUMB_MCP: usize = 2;
    pub const THUMB_IP: usize = 3;
    pub const THUMB_TIP: usize = 4;
    pub const INDEX_MCP: usize = 5;
    pub const INDEX_PIP: usize = 6;
    pub const INDEX_DIP: usize = 7;
    pub const INDEX_TIP: usize = 8;
    pub const MIDDLE_MCP: usize = 9;
    pub const MIDDLE_PIP: usize = 10;
    pub const MIDDLE_TIP: usize = 12;
    pub const RING_MCP: usize = 13;
    pub const RING_PIP: usize = 14;
    pub const RING_TIP: usize = 16;
    pub const PINKY_MCP: usize = 17;
    pub const PINKY_PIP: usize = 18;
    pub const PINKY_TIP: usize = 20;

    /// `[mcp, pip, dip, tip]` for index, middle, ring and pinky.
    pub const FINGERS: [[usize; 4]; 4] = [[5, 6, 7, 8], [9, 10, 11, 12], [13, 14, 15, 16], [17, 18, 19, 20]];
    /// Tips in thumb..pinky order.
    pub const TIPS: [usize; 5] = [4, 8, 12, 16, 20];
    /// Landmarks whose centroid defines the palm center.
    pub const PALM: [usize; 5] = [0, 5, 9, 13, 17];
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LandmarkError {
    #[error("line {line}: malformed record: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: schema violation: {reason}")]
    Schema { line: usize, reason: String },
    #[error("degenerate hand: bounding-box width {width} is below {MIN_BBOX_WIDTH}")]
    DegenerateHand { width: f64 },
    #[error("angle undefined: vertex coincides with an endpoint")]
    AngleUndefined,
    #[error("line {line}: timestamp {t_ms} does not increase (previous {prev_ms})")]
    StreamOrder { line: usize, t_ms: u64, prev_ms: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    /// Relative depth; carried through but not used by the rules.
    pub z: Option<f64>,
}

impl Landmark {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y, z: None }
    }

    pub const fn with_z(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z: Some(z) }
    }

    #[inline]
    pub(crate) fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance(&self, other: &Landmark) -> f64 {
        norm2(sub2(self.xy(), other.xy()))
    }

    fn in_range(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && (COORD_MIN..=COORD_MAX).contains(&self.x)
            && (COORD_MIN..=COORD_MAX).contains(&self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HandFrame {
    pub t_ms: u64,
    pub points: [Landmark; HAND_POINTS],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub t_ms: u64,
    /// Nose tip; its `y` carries pitch (nod).
    pub nose: Landmark,
    /// Chin/jaw reference; its `x` carries yaw (shake).
    pub jaw: Landmark,
}

/// One replay record. Either channel may be absent (e.g. hand out of view).
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t_ms: u64,
    pub hand: Option<HandFrame>,
    pub face: Option<FaceFrame>,
}

/// A hand rescaled so its bounding box is exactly one unit wide.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedHand {
    pub points: [Landmark; HAND_POINTS],
    /// Width of the original bounding box, in normalized image units.
    pub bbox_width: f64,
}

impl NormalizedHand {
    #[inline]
    pub fn point(&self, i: usize) -> &Landmark {
        &self.points[i]
    }

    /// Centroid of the wrist and the four finger MCP joints.
    pub fn palm_center(&self) -> Landmark {
        let (mut x, mut y) = (0.0, 0.0);
        for &i in &idx::PALM {
            x += self.points[i].x;
            y += self.points[i].y;
        }
        let n = idx::PALM.len() as f64;
        Landmark::new(x / n, y / n)
    }
}

// Wire representation. `hand` is 21 `[x, y, z?]` arrays, `face` holds two
// `[x, y]` pairs; unknown keys are ignored.
#[derive(Serialize, Deserialize)]
struct WireRecord {
    t_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hand: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    face: Option<WireFace>,
}

#[derive(Serialize, Deserialize)]
struct WireFace {
    nose: Vec<f64>,
    jaw: Vec<f64>,
}

fn landmark_from_wire(coords: &[f64], line: usize, what: &str) -> Result<Landmark, LandmarkError> {
    let lm = match *coords {
        [x, y] => Landmark::new(x, y),
        [x, y, z] => Landmark::with_z(x, y, z),
        _ => {
            return Err(LandmarkError::Schema {
                line,
                reason: alloc::format!("{what}: expected 2 or 3 coordinates, got {}", coords.len()),
            })
        }
    };
    if !lm.in_range() {
        return Err(LandmarkError::Schema {
            line,
            reason: alloc::format!("{what}: coordinates ({}, {}) outside [{COORD_MIN}, {COORD_MAX}]", lm.x, lm.y),
        });
    }
    Ok(lm)
}

fn landmark_to_wire(lm: &Landmark, keep_z: bool) -> Vec<f64> {
    match (keep_z, lm.z) {
        (true, Some(z)) => alloc::vec![lm.x, lm.y, z],
        _ => alloc::vec![lm.x, lm.y],
    }
}

/// Parse one NDJSON replay record. `line` is only used for error reporting.
pub fn parse_frame(text: &str, line: usize) -> Result<Frame, LandmarkError> {
    let wire: WireRecord = serde_json::from_str(text.trim()).map_err(|e| LandmarkError::Parse {
        line,
        reason: alloc::format!("{e}"),
    })?;

    let hand = match wire.hand {
        None => None,
        Some(raw) => {
            if raw.len() != HAND_POINTS {
                return Err(LandmarkError::Schema {
                    line,
                    reason: alloc::format!("hand: expected {HAND_POINTS} landmarks, got {}", raw.len()),
                });
            }
            let mut points = [Landmark::default(); HAND_POINTS];
            for (slot, coords) in points.iter_mut().zip(raw.iter()) {
                *slot = landmark_from_wire(coords, line, "hand")?;
            }
            Some(HandFrame { t_ms: wire.t_ms, points })
        }
    };

    let face = match wire.face {
        None => None,
        Some(f) => Some(FaceFrame {
            t_ms: wire.t_ms,
            nose: landmark_from_wire(&f.nose, line, "face.nose")?,
            jaw: landmark_from_wire(&f.jaw, line, "face.jaw")?,
        }),
    };

    Ok(Frame { t_ms: wire.t_ms, hand, face })
}

/// Serialize a frame as one NDJSON line (no trailing newline).
pub fn serialize_frame(frame: &Frame) -> String {
    let wire = WireRecord {
        t_ms: frame.t_ms,
        hand: frame
            .hand
            .as_ref()
            .map(|h| h.points.iter().map(|p| landmark_to_wire(p, true)).collect()),
        face: frame.face.as_ref().map(|f| WireFace {
            nose: landmark_to_wire(&f.nose, false),
            jaw: landmark_to_wire(&f.jaw, false),
        }),
    };
    serde_json::to_string(&wire).expect("frame serialization is infallible")
}

/// Parse a whole NDJSON document, enforcing strictly increasing timestamps.
/// Blank lines are skipped.
pub fn parse_stream(text: &str) -> Result<Vec<Frame>, LandmarkError> {
    let mut frames: Vec<Frame> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let frame = parse_frame(raw, i + 1)?;
        if let Some(prev) = frames.last() {
            if frame.t_ms <= prev.t_ms {
                return Err(LandmarkError::StreamOrder { line: i + 1, t_ms: frame.t_ms, prev_ms: prev.t_ms });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Rescale a hand so its bounding box is one unit wide, with the box's
/// top-left corner at the origin. `y` uses the same factor so aspect is kept.
pub fn bbox_normalize(hand: &HandFrame) -> Result<NormalizedHand, LandmarkError> {
    let (mut min_x, mut max_x, mut min_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    for p in &hand.points {
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
    }
    let width = max_x - min_x;
    if !(width > MIN_BBOX_WIDTH) {
        return Err(LandmarkError::DegenerateHand { width });
    }
    let mut points = hand.points;
    for p in points.iter_mut() {
        p.x = (p.x - min_x) / width;
        p.y = (p.y - min_y) / width;
        p.z = p.z.map(|z| z / width);
    }
    Ok(NormalizedHand { points, bbox_width: width })
}

/// Internal angle ∠abc in degrees, in `[0, 180]`, from the image-plane
/// coordinates only.
pub fn internal_angle(a: &Landmark, b: &Landmark, c: &Landmark) -> Result<f64, LandmarkError> {
    let u = sub2(a.xy(), b.xy());
    let v = sub2(c.xy(), b.xy());
    if norm2(u) < 1e-12 || norm2(v) < 1e-12 {
        return Err(LandmarkError::AngleUndefined);
    }
    // atan2 keeps precision near 0 and 180 degrees where acos does not.
    Ok(cross2(u, v).abs().atan2(dot2(u, v)).to_degrees())
}
