use proptest::prelude::*;
use quadsocial_core::classifier::*;
use quadsocial_core::landmark::{Frame, HandFrame, Landmark, NormalizedHand, FaceFrame};
use quadsocial_core::synth;

const WRIST: (f64, f64) = (0.5, 1.0);
const MCP_X: [f64; 4] = [0.40, 0.45, 0.50, 0.55];
const MCP_Y: f64 = 0.6;

fn cfg() -> ClassifierConfig {
    ClassifierConfig::default()
}

fn palm_center() -> (f64, f64) {
    let x = (WRIST.0 + MCP_X.iter().sum::<f64>()) / 5.0;
    let y = (WRIST.1 + 4.0 * MCP_Y) / 5.0;
    (x, y)
}

#[derive(Clone, Copy)]
enum Finger {
    /// Straight up, PIP angle 180.
    Straight,
    /// PIP angle in degrees, bending towards +x; tip placed explicitly.
    Bent(f64, (f64, f64)),
}

fn build(thumb: [(f64, f64); 4], fingers: [Finger; 4]) -> NormalizedHand {
    let mut pts = [Landmark::default(); 21];
    pts[0] = Landmark::new(WRIST.0, WRIST.1);
    for (i, p) in thumb.iter().enumerate() {
        pts[1 + i] = Landmark::new(p.0, p.1);
    }
    for (f, kind) in fingers.iter().enumerate() {
        let base = 5 + 4 * f;
        let x = MCP_X[f];
        pts[base] = Landmark::new(x, MCP_Y);
        pts[base + 1] = Landmark::new(x, MCP_Y - 0.1);
        match *kind {
            Finger::Straight => {
                pts[base + 2] = Landmark::new(x, MCP_Y - 0.2);
                pts[base + 3] = Landmark::new(x, MCP_Y - 0.3);
            }
            Finger::Bent(angle, tip) => {
                // Direction PIP->MCP is +y; rotate it by `angle`.
                let a = angle.to_radians();
                pts[base + 2] = Landmark::new(x + 0.05 * a.sin(), MCP_Y - 0.1 + 0.05 * a.cos());
                pts[base + 3] = Landmark::new(tip.0, tip.1);
            }
        }
    }
    NormalizedHand { points: pts, bbox_width: 1.0 }
}

fn thumb_out() -> [(f64, f64); 4] {
    [(0.35, 0.9), (0.25, 0.8), (0.15, 0.7), (0.05, 0.6)]
}

fn curled_tips(dist: f64) -> [Finger; 4] {
    let (px, py) = palm_center();
    [-0.03, -0.01, 0.01, 0.03].map(|dx: f64| Finger::Bent(120.0, (px + dx, py - (dist * dist - dx * dx).sqrt())))
}

#[test]
fn straight_and_curled_finger_states() {
    let open = build(thumb_out(), [Finger::Straight; 4]);
    let fs = finger_states(&open, &cfg());
    assert!(fs.iter().all(|f| f.extended));
    assert!(fs[1..].iter().all(|f| (f.pip_angle - 180.0).abs() < 1e-9));

    let (px, py) = palm_center();
    let tucked = [(0.45, 0.9), (0.42, 0.8), (0.45, 0.72), (px - 0.05, py)];
    let curled = build(tucked, [Finger::Bent(90.0, (0.5, 0.95)); 4]);
    let fs = finger_states(&curled, &cfg());
    assert!(fs.iter().all(|f| !f.extended));
    assert!(fs[1..].iter().all(|f| (f.pip_angle - 90.0).abs() < 1e-9));
}

#[test]
fn index_only_extended() {
    let mut fingers = curled_tips(0.1);
    fingers[0] = Finger::Bent(175.0, (MCP_X[0] + 0.02, MCP_Y - 0.3));
    let h = build(thumb_out(), fingers);
    let fs = finger_states(&h, &cfg());
    // Rule text: extended iff tip above PIP and PIP angle at least 160.
    assert!((fs[1].pip_angle - 175.0).abs() < 1e-9);
    let ext: Vec<bool> = fs[1..].iter().map(|f| f.extended).collect();
    assert_eq!(ext, [true, false, false, false]);
}

#[test]
fn open_palm_fixture() {
    let h = build(thumb_out(), [Finger::Straight; 4]);
    for w in MCP_X.windows(2) {
        assert!((w[1] - w[0] - 0.05).abs() < 1e-12);
    }
    assert_eq!(classify_hand(&h, &cfg()), Some(Gesture::OpenPalm));
}

#[test]
fn fist_fixture() {
    let (px, py) = palm_center();
    let thumb = [(0.45, 0.9), (0.42, 0.8), (0.42, 0.72), (px - 0.1, py)];
    let h = build(thumb, curled_tips(0.10));
    for t in [8, 12, 16, 20] {
        let d = ((h.points[t].x - px).powi(2) + (h.points[t].y - py).powi(2)).sqrt();
        assert!((d - 0.10).abs() < 1e-12);
    }
    assert!(finger_states(&h, &cfg())[1..].iter().all(|f| (f.pip_angle - 120.0).abs() < 1e-9));
    assert_eq!(classify_hand(&h, &cfg()), Some(Gesture::Fist));
}

#[test]
fn thumb_up_and_down_fixtures() {
    let up = [(0.35, 0.7), (0.3, 0.55), (0.3, 0.51), (0.3, 0.47)];
    let h = build(up, curled_tips(0.1));
    assert!((h.points[2].y - h.points[4].y - 0.08).abs() < 1e-12);
    assert_eq!(classify_hand(&h, &cfg()), Some(Gesture::ThumbUp));

    let down = [(0.35, 0.8), (0.3, 0.9), (0.3, 0.94), (0.3, 0.98)];
    let h = build(down, curled_tips(0.1));
    assert_eq!(classify_hand(&h, &cfg()), Some(Gesture::ThumbDown));
}

#[test]
fn pointing_up_fixture() {
    let (px, py) = palm_center();
    let thumb = [(0.45, 0.9), (0.42, 0.8), (0.42, 0.72), (px - 0.1, py)];
    let mut fingers = curled_tips(0.1);
    fingers[0] = Finger::Straight;
    let h = build(thumb, fingers);
    assert_eq!(classify_hand(&h, &cfg()), Some(Gesture::PointingUp));
}

#[test]
fn ema_definition() {
    assert!((ema(0.0, 1.0, 0.6) - 0.6).abs() < 1e-15);
    assert!((ema(1.0, 0.0, 0.6) - 0.4).abs() < 1e-15);
    assert_eq!(ema(0.37, 0.37, 0.6), 0.37);
}

fn face_stream(nose_y: impl Fn(f64) -> f64, jaw_x: impl Fn(f64) -> f64, ms: u64, step: u64) -> Vec<FaceFrame> {
    (0..=ms / step)
        .map(|k| {
            let t = k * step;
            let s = t as f64;
            FaceFrame { t_ms: t, nose: Landmark::new(0.5, nose_y(s)), jaw: Landmark::new(jaw_x(s), 0.6) }
        })
        .collect()
}

/// Independent check: smooth, take the last `window` ms, find extrema as
/// sign changes of the first difference, and keep swings above `thr`.
fn oracle_fires(samples: &[(u64, f64)], alpha: f64, window: u64, thr: f64) -> bool {
    let mut smooth = Vec::new();
    let mut prev: Option<f64> = None;
    for &(t, v) in samples {
        let s = match prev {
            None => v,
            Some(p) => alpha * v + (1.0 - alpha) * p,
        };
        prev = Some(s);
        smooth.push((t, s));
    }
    let t_end = smooth.last().unwrap().0;
    let win: Vec<f64> = smooth.iter().filter(|(t, _)| t_end - t <= window).map(|x| x.1).collect();
    let mut extrema = vec![win[0]];
    for i in 1..win.len() - 1 {
        let (a, b) = (win[i] - win[i - 1], win[i + 1] - win[i]);
        if a * b < 0.0 {
            extrema.push(win[i]);
        }
    }
    extrema.push(*win.last().unwrap());
    let big = extrema.windows(2).filter(|w| (w[1] - w[0]).abs() > thr).count();
    // n qualifying swings contain n - 1 reversals.
    big >= 3
}

fn run_head(frames: &[FaceFrame]) -> Option<Gesture> {
    let mut tr = HeadTracker::new(&cfg());
    let mut last = None;
    for f in frames {
        last = update_head(&mut tr, f).unwrap();
    }
    last
}

#[test]
fn constant_face_is_nothing() {
    let frames = face_stream(|_| 0.4, |_| 0.5, 1000, 33);
    assert_eq!(run_head(&frames), None);
}

#[test]
fn nod_sinusoid() {
    let nose = |t: f64| 0.4 + 0.03 * (2.0 * std::f64::consts::PI * t / 200.0).sin();
    let frames = face_stream(nose, |_| 0.5, 1000, 33);
    let c = cfg();
    let samples: Vec<(u64, f64)> = frames.iter().map(|f| (f.t_ms, f.nose.y)).collect();
    assert!(oracle_fires(&samples, c.ema_alpha, c.window_ms, c.nose_threshold));
    assert_eq!(run_head(&frames), Some(Gesture::Nod));
}

#[test]
fn small_shake_is_nothing() {
    let jaw = |t: f64| 0.5 + 0.01 * (2.0 * std::f64::consts::PI * t / 200.0).sin();
    let frames = face_stream(|_| 0.4, jaw, 1000, 33);
    let c = cfg();
    let samples: Vec<(u64, f64)> = frames.iter().map(|f| (f.t_ms, f.jaw.x)).collect();
    assert!(!oracle_fires(&samples, c.ema_alpha, c.window_ms, c.jaw_threshold));
    assert_eq!(run_head(&frames), None);
}

#[test]
fn large_shake_and_nod_tie() {
    let s = |t: f64| 0.04 * (2.0 * std::f64::consts::PI * t / 200.0).sin();
    assert_eq!(run_head(&face_stream(|_| 0.4, |t| 0.5 + s(t), 1000, 33)), Some(Gesture::Shake));
    assert_eq!(run_head(&face_stream(|t| 0.4 + s(t), |t| 0.5 + s(t), 1000, 33)), Some(Gesture::Nod));
}

#[test]
fn out_of_order_face_frame() {
    let mut tr = HeadTracker::new(&cfg());
    let f = FaceFrame { t_ms: 100, nose: Landmark::new(0.5, 0.4), jaw: Landmark::new(0.5, 0.6) };
    tr.update(&f).unwrap();
    assert!(matches!(tr.update(&FaceFrame { t_ms: 100, ..f }), Err(ClassifierError::StreamOrder { .. })));
}

#[test]
fn window_span_bounded() {
    let mut tr = HeadTracker::new(&cfg());
    for f in face_stream(|_| 0.4, |_| 0.5, 2000, 33) {
        tr.update(&f).unwrap();
        assert!(tr.window_span_ms() <= cfg().window_ms + 33);
    }
}

#[test]
fn debounce_examples() {
    let palm = Some(Gesture::OpenPalm);
    let fist = Some(Gesture::Fist);
    let ev = debounce([palm; 4].into_iter().zip(0u64..), 3);
    assert_eq!(ev.len(), 1);
    assert_eq!((ev[0].gesture, ev[0].t_ms), (Gesture::OpenPalm, 2));

    let seq: Vec<_> = [palm; 5].into_iter().chain([fist; 5]).zip(0u64..).collect();
    let ev: Vec<Gesture> = debounce(seq, 3).into_iter().map(|e| e.gesture).collect();
    assert_eq!(ev, [Gesture::OpenPalm, Gesture::Fist]);

    let alt: Vec<_> = (0..20).map(|i| if i % 2 == 0 { palm } else { None }).zip(0u64..).collect();
    assert!(debounce(alt, 3).is_empty());
}

fn arb_obs() -> impl Strategy<Value = Option<Gesture>> {
    prop_oneof![Just(None), proptest::sample::select(Gesture::ALL.to_vec()).prop_map(Some)]
}

proptest! {
    #[test]
    fn debounce_never_repeats(obs in proptest::collection::vec(arb_obs(), 0..200)) {
        let ev = debounce(obs.into_iter().zip(0u64..), 3);
        for w in ev.windows(2) {
            prop_assert_ne!(w[0].gesture, w[1].gesture);
        }
    }

    #[test]
    fn hand_rules_scale_and_translation_invariant(
        g in proptest::sample::select(Gesture::HAND.to_vec()),
        seed in 0u64..10_000,
        k in -2i32..3,
        dx in -0.3f64..0.3,
        dy in -0.3f64..0.3,
    ) {
        let h = synth::hand_frame(g, seed, 0);
        let s = 2f64.powi(k);
        let moved = HandFrame {
            t_ms: 0,
            points: h.points.map(|p| Landmark::new(p.x * s + dx, p.y * s + dy)),
        };
        prop_assert_eq!(classify_hand_frame(&h, &cfg()), classify_hand_frame(&moved, &cfg()));
    }

    #[test]
    fn head_shift_invariant(g in proptest::sample::select(Gesture::HEAD.to_vec()), seed in 0u64..1000, shift in -0.25f64..0.25) {
        let clip = synth::head_clip(g, seed, 40);
        let mut a = HeadTracker::new(&cfg());
        let mut b = HeadTracker::new(&cfg());
        for f in clip.iter().filter_map(|f| f.face) {
            let mut moved = f;
            moved.nose.y += shift;
            moved.jaw.x += shift;
            prop_assert_eq!(a.update(&f).unwrap(), b.update(&moved).unwrap());
        }
    }

    #[test]
    fn stream_classifier_deterministic(g in proptest::sample::select(Gesture::ALL.to_vec()), seed in 0u64..1000) {
        let frames: Vec<Frame> = synth::clip(g, seed, 30);
        let run = || {
            let mut sc = StreamClassifier::new(cfg()).unwrap();
            frames.iter().filter_map(|f| sc.push(f).unwrap()).collect::<Vec<_>>()
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn synthetic_clips_classify_as_labelled() {
    for g in Gesture::ALL {
        for seed in 0..5 {
            let frames = synth::clip(g, seed, 45);
            assert_eq!(classify_clip(&frames, &cfg()).unwrap(), Some(g), "{g:?} seed {seed}");
        }
    }
}
