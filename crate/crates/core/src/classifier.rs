//! Rule-based gesture recognition.
//!
//! Hand gestures are decided per frame from a bounding-box normalized hand.
//! Head gestures (nod, shake) come from a sliding window of exponentially
//! smoothed nose/jaw signals. [`Debouncer`] turns the per-frame stream into
//! change events.

use alloc::collections::VecDeque;

#[cfg(not(any(feature = "std", test)))]
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::landmark::{bbox_normalize, idx, internal_angle, FaceFrame, HandFrame, LandmarkError, NormalizedHand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gesture {
    OpenPalm,
    Fist,
    ThumbUp,
    ThumbDown,
    PointingUp,
    Nod,
    Shake,
}

impl Gesture {
    pub const ALL: [Gesture; 7] = [
        Gesture::OpenPalm,
        Gesture::Fist,
        Gesture::ThumbUp,
        Gesture::ThumbDown,
        Gesture::PointingUp,
        Gesture::Nod,
        Gesture::Shake,
    ];
    pub const HAND: [Gesture; 5] =
        [Gesture::OpenPalm, Gesture::Fist, Gesture::ThumbUp, Gesture::ThumbDown, Gesture::PointingUp];
    pub const HEAD: [Gesture; 2] = [Gesture::Nod, Gesture::Shake];

    /// Corpus directory label.
    pub fn label(self) -> &'static str {
        match self {
            Gesture::OpenPalm => "open_palm",
            Gesture::Fist => "fist",
            Gesture::ThumbUp => "thumb_up",
            Gesture::ThumbDown => "thumb_down",
            Gesture::PointingUp => "pointing_up",
            Gesture::Nod => "nod",
            Gesture::Shake => "shake",
        }
    }

    pub fn from_label(s: &str) -> Option<Gesture> {
        Gesture::ALL.into_iter().find(|g| g.label() == s)
    }

    pub fn is_head(self) -> bool {
        matches!(self, Gesture::Nod | Gesture::Shake)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GestureEvent {
    pub gesture: Gesture,
    pub t_ms: u64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifierError {
    #[error("invalid classifier config: {0}")]
    Config(&'static str),
    #[error("face frame at {t_ms} ms is not after previous frame at {prev_ms} ms")]
    StreamOrder { t_ms: u64, prev_ms: u64 },
}

/// Detection thresholds. Distances are in bounding-box normalized units,
/// head thresholds in normalized image units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    /// Minimum x-spacing between adjacent fingertips for an open palm.
    pub spacing_min: f64,
    /// Fingertips-to-palm-center distance bound for a fist.
    pub palm_dist_max: f64,
    /// Thumb (or index) tip must clear its MCP by this much vertically.
    pub thumb_delta: f64,
    /// PIP angle (degrees) separating flexed from extended fingers.
    pub flex_angle: f64,
    /// Thumb counts as extended beyond this tip-to-palm-center distance.
    pub thumb_extended_dist: f64,
    pub nose_threshold: f64,
    pub jaw_threshold: f64,
    pub window_ms: u64,
    pub ema_alpha: f64,
    pub min_sign_changes: usize,
    /// Consecutive identical frames required before a classification is emitted.
    pub stable_frames: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            spacing_min: 0.03,
            palm_dist_max: 0.15,
            thumb_delta: 0.05,
            flex_angle: 160.0,
            thumb_extended_dist: 0.25,
            nose_threshold: 0.015,
            jaw_threshold: 0.02,
            window_ms: 400,
            ema_alpha: 0.6,
            min_sign_changes: 2,
            stable_frames: 3,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let positive = [
            self.spacing_min,
            self.palm_dist_max,
            self.thumb_delta,
            self.flex_angle,
            self.thumb_extended_dist,
            self.nose_threshold,
            self.jaw_threshold,
        ];
        if positive.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(ClassifierError::Config("all thresholds must be finite and > 0"));
        }
        if !(self.ema_alpha > 0.0 && self.ema_alpha <= 1.0) {
            return Err(ClassifierError::Config("ema_alpha must lie in (0, 1]"));
        }
        if self.window_ms == 0 || self.min_sign_changes == 0 || self.stable_frames == 0 {
            return Err(ClassifierError::Config("window_ms, min_sign_changes and stable_frames must be > 0"));
        }
        Ok(())
    }
}

/// Exponential moving average step.
#[inline]
pub fn ema(prev: f64, sample: f64, alpha: f64) -> f64 {
    // algebraically alpha*sample + (1-alpha)*prev; this form is exact when sample == prev
    prev + alpha * (sample - prev)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerState {
    pub extended: bool,
    /// PIP internal angle for fingers, IP angle for the thumb (degrees).
    pub pip_angle: f64,
    pub tip_y: f64,
    pub mcp_y: f64,
}

impl FingerState {
    fn flexed(&self, cfg: &ClassifierConfig) -> bool {
        self.pip_angle < cfg.flex_angle
    }
}

/// Per-finger states in thumb, index, middle, ring, pinky order.
pub fn finger_states(hand: &NormalizedHand, cfg: &ClassifierConfig) -> [FingerState; 5] {
    let p = |i: usize| hand.point(i);
    let palm = hand.palm_center();

    let thumb_angle = internal_angle(p(idx::THUMB_MCP), p(idx::THUMB_IP), p(idx::THUMB_TIP)).unwrap_or(0.0);
    let thumb = FingerState {
        extended: p(idx::THUMB_TIP).distance(&palm) > cfg.thumb_extended_dist,
        pip_angle: thumb_angle,
        tip_y: p(idx::THUMB_TIP).y,
        mcp_y: p(idx::THUMB_MCP).y,
    };

    let mut out = [thumb; 5];
    for (slot, [mcp, pip, dip, tip]) in out[1..].iter_mut().zip(idx::FINGERS) {
        let angle = internal_angle(p(mcp), p(pip), p(dip)).unwrap_or(0.0);
        let tip_above_pip = p(tip).y < p(pip).y;
        *slot = FingerState {
            extended: tip_above_pip && angle >= cfg.flex_angle,
            pip_angle: angle,
            tip_y: p(tip).y,
            mcp_y: p(mcp).y,
        };
    }
    out
}

/// Evaluate the hand rules in priority order Fist, ThumbUp, ThumbDown,
/// PointingUp, OpenPalm and return the first match.
pub fn classify_hand(hand: &NormalizedHand, cfg: &ClassifierConfig) -> Option<Gesture> {
    let fs = finger_states(hand, cfg);
    let [thumb, index, middle, ring, pinky] = fs;
    let fingers = [index, middle, ring, pinky];
    let all_flexed = fingers.iter().all(|f| f.flexed(cfg));

    // Fist: fingers flexed, thumb tucked, fingertips gathered at the palm.
    let palm = hand.palm_center();
    let tips = &idx::TIPS[1..];
    let (mut cx, mut cy) = (0.0, 0.0);
    for &t in tips {
        cx += hand.point(t).x;
        cy += hand.point(t).y;
    }
    let n = tips.len() as f64;
    let tips_to_palm = ((cx / n - palm.x).powi(2) + (cy / n - palm.y).powi(2)).sqrt();
    if all_flexed && !thumb.extended && tips_to_palm < cfg.palm_dist_max {
        return Some(Gesture::Fist);
    }

    let others_min_y = fingers.iter().map(|f| f.tip_y).fold(f64::INFINITY, f64::min);
    let others_max_y = fingers.iter().map(|f| f.tip_y).fold(f64::NEG_INFINITY, f64::max);

    if all_flexed && thumb.tip_y < thumb.mcp_y - cfg.thumb_delta && thumb.tip_y < others_min_y {
        return Some(Gesture::ThumbUp);
    }
    if all_flexed && thumb.tip_y > thumb.mcp_y + cfg.thumb_delta && thumb.tip_y > others_max_y {
        return Some(Gesture::ThumbDown);
    }

    let rest_flexed = [middle, ring, pinky].iter().all(|f| f.flexed(cfg));
    let index_highest = fs.iter().enumerate().all(|(i, f)| i == 1 || index.tip_y < f.tip_y);
    if index.extended
        && index.tip_y < index.mcp_y - cfg.thumb_delta
        && rest_flexed
        && !thumb.extended
        && index_highest
    {
        return Some(Gesture::PointingUp);
    }

    let spaced = tips.windows(2).all(|w| (hand.point(w[0]).x - hand.point(w[1]).x).abs() > cfg.spacing_min);
    if fingers.iter().all(|f| f.extended) && thumb.extended && spaced {
        return Some(Gesture::OpenPalm);
    }
    None
}

/// Normalize and classify in one step; degenerate hands classify as nothing.
pub fn classify_hand_frame(hand: &HandFrame, cfg: &ClassifierConfig) -> Option<Gesture> {
    match bbox_normalize(hand) {
        Ok(n) => classify_hand(&n, cfg),
        Err(LandmarkError::DegenerateHand { .. }) => None,
        Err(_) => None,
    }
}

/// Count direction reversals whose swing from the previous extremum exceeds
/// `threshold`. Swings are measured between consecutive extrema, with the
/// first sample acting as the initial reference.
pub fn count_reversals<I: IntoIterator<Item = f64>>(samples: I, threshold: f64) -> usize {
    #[derive(Clone, Copy, PartialEq)]
    enum Dir {
        Up,
        Down,
    }
    let mut it = samples.into_iter();
    let Some(first) = it.next() else { return 0 };
    let (mut lo, mut hi) = (first, first);
    let mut dir: Option<Dir> = None;
    let mut extreme = first;
    let mut count = 0;
    for v in it {
        match dir {
            None => {
                lo = lo.min(v);
                hi = hi.max(v);
                if v - lo > threshold {
                    dir = Some(Dir::Up);
                    extreme = v;
                } else if hi - v > threshold {
                    dir = Some(Dir::Down);
                    extreme = v;
                }
            }
            Some(Dir::Up) => {
                if v > extreme {
                    extreme = v;
                } else if extreme - v > threshold {
                    count += 1;
                    dir = Some(Dir::Down);
                    extreme = v;
                }
            }
            Some(Dir::Down) => {
                if v < extreme {
                    extreme = v;
                } else if v - extreme > threshold {
                    count += 1;
                    dir = Some(Dir::Up);
                    extreme = v;
                }
            }
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeadSample {
    t_ms: u64,
    nose_y: f64,
    jaw_x: f64,
}

/// Sliding-window nod/shake detector over smoothed nose `y` and jaw `x`.
#[derive(Debug, Clone)]
pub struct HeadTracker {
    window_ms: u64,
    alpha: f64,
    nose_threshold: f64,
    jaw_threshold: f64,
    min_sign_changes: usize,
    window: VecDeque<HeadSample>,
    ema_state: Option<(f64, f64)>,
    last_t: Option<u64>,
    pub sign_changes_pitch: usize,
    pub sign_changes_yaw: usize,
}

impl HeadTracker {
    pub fn new(cfg: &ClassifierConfig) -> Self {
        Self {
            window_ms: cfg.window_ms,
            alpha: cfg.ema_alpha,
            nose_threshold: cfg.nose_threshold,
            jaw_threshold: cfg.jaw_threshold,
            min_sign_changes: cfg.min_sign_changes,
            window: VecDeque::new(),
            ema_state: None,
            last_t: None,
            sign_changes_pitch: 0,
            sign_changes_yaw: 0,
        }
    }

    /// Time covered by the current window contents.
    pub fn window_span_ms(&self) -> u64 {
        match (self.window.front(), self.window.back()) {
            (Some(a), Some(b)) => b.t_ms - a.t_ms,
            _ => 0,
        }
    }

    pub fn reset(&mut self) {
        self.window.clear();
        self.ema_state = None;
        self.last_t = None;
        self.sign_changes_pitch = 0;
        self.sign_changes_yaw = 0;
    }

    /// Feed one face frame. Returns `Nod` or `Shake` when the window
    /// currently holds enough qualifying reversals; a nod wins a tie.
    pub fn update(&mut self, frame: &FaceFrame) -> Result<Option<Gesture>, ClassifierError> {
        if let Some(prev) = self.last_t {
            if frame.t_ms <= prev {
                return Err(ClassifierError::StreamOrder { t_ms: frame.t_ms, prev_ms: prev });
            }
        }
        self.last_t = Some(frame.t_ms);

        let (nose, jaw) = match self.ema_state {
            None => (frame.nose.y, frame.jaw.x),
            Some((n, j)) => (ema(n, frame.nose.y, self.alpha), ema(j, frame.jaw.x, self.alpha)),
        };
        self.ema_state = Some((nose, jaw));

        self.window.push_back(HeadSample { t_ms: frame.t_ms, nose_y: nose, jaw_x: jaw });
        while let Some(front) = self.window.front() {
            if frame.t_ms - front.t_ms > self.window_ms {
                self.window.pop_front();
            } else {
                break;
            }
        }

        self.sign_changes_pitch = count_reversals(self.window.iter().map(|s| s.nose_y), self.nose_threshold);
        self.sign_changes_yaw = count_reversals(self.window.iter().map(|s| s.jaw_x), self.jaw_threshold);

        Ok(if self.sign_changes_pitch >= self.min_sign_changes {
            Some(Gesture::Nod)
        } else if self.sign_changes_yaw >= self.min_sign_changes {
            Some(Gesture::Shake)
        } else {
            None
        })
    }
}

/// Free-function form of [`HeadTracker::update`].
pub fn update_head(tracker: &mut HeadTracker, frame: &FaceFrame) -> Result<Option<Gesture>, ClassifierError> {
    tracker.update(frame)
}

/// Change-only emission with a run-length stability requirement.
#[derive(Debug, Clone)]
pub struct Debouncer {
    stable_frames: usize,
    candidate: Option<Gesture>,
    run: usize,
    last_emitted: Option<Gesture>,
}

impl Debouncer {
    pub fn new(stable_frames: usize) -> Self {
        Self { stable_frames: stable_frames.max(1), candidate: None, run: 0, last_emitted: None }
    }

    pub fn last_emitted(&self) -> Option<Gesture> {
        self.last_emitted
    }

    /// Currently stable classification, if the latest run is long enough.
    pub fn stable(&self) -> Option<Gesture> {
        if self.run >= self.stable_frames {
            self.candidate
        } else {
            None
        }
    }

    pub fn push(&mut self, observed: Option<Gesture>, t_ms: u64) -> Option<GestureEvent> {
        if observed == self.candidate {
            self.run = self.run.saturating_add(1);
        } else {
            self.candidate = observed;
            self.run = 1;
        }
        let gesture = self.candidate?;
        if self.run == self.stable_frames && self.last_emitted != Some(gesture) {
            self.last_emitted = Some(gesture);
            return Some(GestureEvent { gesture, t_ms, confidence: 1.0 });
        }
        None
    }
}

/// Run a whole stream of per-frame classifications through a [`Debouncer`].
pub fn debounce<I>(stream: I, stable_frames: usize) -> alloc::vec::Vec<GestureEvent>
where
    I: IntoIterator<Item = (Option<Gesture>, u64)>,
{
    let mut d = Debouncer::new(stable_frames);
    stream.into_iter().filter_map(|(g, t)| d.push(g, t)).collect()
}

/// Per-stream classifier: hand rules, head tracker and debouncer together.
///
/// When a frame carries both channels, a detected head gesture takes
/// precedence over the hand result for that frame.
#[derive(Debug, Clone)]
pub struct StreamClassifier {
    cfg: ClassifierConfig,
    head: HeadTracker,
    debouncer: Debouncer,
}

impl StreamClassifier {
    pub fn new(cfg: ClassifierConfig) -> Result<Self, ClassifierError> {
        cfg.validate()?;
        let head = HeadTracker::new(&cfg);
        let debouncer = Debouncer::new(cfg.stable_frames);
        Ok(Self { cfg, head, debouncer })
    }

    pub fn config(&self) -> &ClassifierConfig {
        &self.cfg
    }

    /// Per-frame (pre-debounce) classification.
    pub fn observe(&mut self, frame: &crate::landmark::Frame) -> Result<Option<Gesture>, ClassifierError> {
        let head = match &frame.face {
            Some(face) => self.head.update(face)?,
            None => None,
        };
        let hand = frame.hand.as_ref().and_then(|h| classify_hand_frame(h, &self.cfg));
        Ok(head.or(hand))
    }

    /// Classify and debounce one frame.
    pub fn push(&mut self, frame: &crate::landmark::Frame) -> Result<Option<GestureEvent>, ClassifierError> {
        let g = self.observe(frame)?;
        Ok(self.debouncer.push(g, frame.t_ms))
    }

    pub fn stable(&self) -> Option<Gesture> {
        self.debouncer.stable()
    }
}

/// Clip-level decision: the gesture held longest in the debounced stable
/// state, ties broken by [`Gesture::ALL`] order. `None` if nothing was
/// ever stable.
pub fn classify_clip(frames: &[crate::landmark::Frame], cfg: &ClassifierConfig) -> Result<Option<Gesture>, ClassifierError> {
    let mut sc = StreamClassifier::new(cfg.clone())?;
    let mut counts = [0usize; 7];
    for f in frames {
        sc.push(f)?;
        if let Some(g) = sc.stable() {
            counts[Gesture::ALL.iter().position(|x| *x == g).expect("listed")] += 1;
        }
    }
    let (best, n) = counts.iter().enumerate().fold((0, 0), |acc, (i, &n)| if n > acc.1 { (i, n) } else { acc });
    Ok((n > 0).then(|| Gesture::ALL[best]))
}
