//! Labelled landmark corpora laid out as `<dir>/<label>/<clip>.ndjson`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use quadsocial_core::classifier::{classify_clip, ClassifierConfig, Gesture};
use quadsocial_core::landmark::Frame;
use quadsocial_core::synth;

use crate::formats::{read_replay, write_replay};
use crate::{io_err, Error, Result};

#[derive(Debug, Clone)]
pub struct LabeledClip {
    pub label: Gesture,
    pub path: PathBuf,
    pub frames: Vec<Frame>,
}

/// Every clip under `dir`, sorted by path. Directories whose name is not a
/// gesture label are an error.
pub fn load(dir: &Path) -> Result<Vec<LabeledClip>> {
    let mut clips = Vec::new();
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for sub in subdirs {
        let name = sub.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let label = Gesture::from_label(name).ok_or_else(|| Error::Usage(format!("unknown label directory {}", sub.display())))?;
        let mut files: Vec<PathBuf> = fs::read_dir(&sub)
            .map_err(io_err(&sub))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "ndjson"))
            .collect();
        files.sort();
        for path in files {
            let frames = read_replay(&path)?;
            clips.push(LabeledClip { label, path, frames });
        }
    }
    Ok(clips)
}

/// Shape of a generated corpus.
#[derive(Debug, Clone, Copy)]
pub struct CorpusSpec {
    pub hand_clips: usize,
    pub head_clips: usize,
    pub hand_frames: usize,
    pub head_frames: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self { hand_clips: 25, head_clips: 5, hand_frames: 20, head_frames: 45, seed: 2024 }
    }
}

fn round_frame(f: &mut Frame) {
    let r = |v: &mut f64| *v = (*v * 1e5).round() / 1e5;
    if let Some(h) = f.hand.as_mut() {
        for p in h.points.iter_mut() {
            r(&mut p.x);
            r(&mut p.y);
            if let Some(z) = p.z.as_mut() {
                r(z);
            }
        }
    }
    if let Some(face) = f.face.as_mut() {
        for p in [&mut face.nose, &mut face.jaw] {
            r(&mut p.x);
            r(&mut p.y);
        }
    }
}

/// Write a synthetic corpus. Coordinates are rounded to 1e-5.
pub fn generate(dir: &Path, spec: &CorpusSpec) -> Result<usize> {
    let mut written = 0;
    for (gi, g) in Gesture::ALL.into_iter().enumerate() {
        let sub = dir.join(g.label());
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;
        let (n, frames) = if g.is_head() { (spec.head_clips, spec.head_frames) } else { (spec.hand_clips, spec.hand_frames) };
        for k in 0..n {
            let seed = spec.seed.wrapping_mul(1000).wrapping_add((gi * 100 + k) as u64);
            let mut clip = synth::clip(g, seed, frames);
            clip.iter_mut().for_each(round_frame);
            write_replay(&sub.join(format!("{}_{k:02}.ndjson", g.label())), &clip)?;
            written += 1;
        }
    }
    Ok(written)
}

/// Accuracy summary; the confusion matrix is keyed by true then predicted
/// label, with `none` for clips that never settled on a gesture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub per_gesture_accuracy: BTreeMap<String, f64>,
    pub hand_correct: usize,
    pub hand_total: usize,
    pub head_correct: usize,
    pub head_total: usize,
    pub hand_accuracy: f64,
    pub head_accuracy: f64,
    /// Classifier-only time per frame (µs), excluding file IO.
    pub mean_frame_us: f64,
    pub noise_sigma: f64,
}

/// Classify every clip, optionally after adding landmark noise.
pub fn evaluate(clips: &[LabeledClip], cfg: &ClassifierConfig, noise: Option<(f64, u64)>) -> Result<ClassificationReport> {
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let (mut hc, mut ht, mut dc, mut dt) = (0, 0, 0, 0);
    let mut frames = 0usize;
    let mut elapsed = 0.0;
    for (i, clip) in clips.iter().enumerate() {
        let input = match noise {
            Some((sigma, seed)) => synth::perturb(&clip.frames, sigma, seed.wrapping_add(i as u64)),
            None => clip.frames.clone(),
        };
        let t = Instant::now();
        let pred = classify_clip(&input, cfg)?;
        elapsed += t.elapsed().as_secs_f64();
        frames += input.len();
        let ok = pred == Some(clip.label);
        if clip.label.is_head() {
            dt += 1;
            dc += ok as usize;
        } else {
            ht += 1;
            hc += ok as usize;
        }
        *confusion
            .entry(clip.label.label().into())
            .or_default()
            .entry(pred.map_or("none", |g| g.label()).into())
            .or_default() += 1;
    }
    let per_gesture_accuracy = confusion
        .iter()
        .map(|(label, row)| {
            let total: usize = row.values().sum();
            (label.clone(), *row.get(label).unwrap_or(&0) as f64 / total.max(1) as f64)
        })
        .collect();
    let ratio = |c: usize, t: usize| if t == 0 { 0.0 } else { c as f64 / t as f64 };
    Ok(ClassificationReport {
        confusion,
        per_gesture_accuracy,
        hand_correct: hc,
        hand_total: ht,
        head_correct: dc,
        head_total: dt,
        hand_accuracy: ratio(hc, ht),
        head_accuracy: ratio(dc, dt),
        mean_frame_us: if frames == 0 { 0.0 } else { elapsed * 1e6 / frames as f64 },
        noise_sigma: noise.map_or(0.0, |n| n.0),
    })
}
