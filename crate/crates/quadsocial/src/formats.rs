//! On-disk formats: checkpoint JSON and NDJSON record files (landmark
//! replays, commands, telemetry, trajectories).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use quadsocial_core::actuator::Telemetry;
use quadsocial_core::bridge::{decode, encode, Command};
use quadsocial_core::landmark::{parse_stream, serialize_frame, Frame, LandmarkError};
use quadsocial_core::model::{CurvePoint, PosePolicy, RobotGeometry, StagePoses, TrainOutcome};
use quadsocial_core::reward::{QuadState, TrajectoryMetrics};

use crate::{io_err, Error, Result};

/// Read one JSON value per non-blank line.
pub fn read_ndjson<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Record { path: path.into(), line: i + 1, reason: e.to_string() })
        })
        .collect()
}

pub fn write_ndjson<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|source| Error::Json { path: path.into(), source })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_replay(path: &Path) -> Result<Vec<Frame>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_stream(&text).map_err(|e| {
        let line = match &e {
            LandmarkError::Parse { line, .. } | LandmarkError::Schema { line, .. } | LandmarkError::StreamOrder { line, .. } => *line,
            _ => 0,
        };
        Error::Record { path: path.into(), line, reason: e.to_string() }
    })
}

pub fn write_replay(path: &Path, frames: &[Frame]) -> Result<()> {
    let mut out = String::new();
    for f in frames {
        out.push_str(&serialize_frame(f));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Commands from an NDJSON file. Malformed lines are an error here, unlike
/// on a live connection.
pub fn read_commands(path: &Path) -> Result<Vec<Command>> {
    let mut bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.last().is_some_and(|b| *b != b'\n') {
        bytes.push(b'\n');
    }
    let d = decode(&bytes);
    if let Some(e) = d.errors.first() {
        let line = String::from_utf8_lossy(&bytes).lines().position(|l| l == e.line).map_or(0, |i| i + 1);
        return Err(Error::Record { path: path.into(), line, reason: e.reason.clone() });
    }
    Ok(d.commands)
}

pub fn write_commands(path: &Path, cmds: &[Command]) -> Result<()> {
    let bytes: Vec<u8> = cmds.iter().flat_map(encode).collect();
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn read_telemetry(path: &Path) -> Result<Vec<Telemetry>> {
    read_ndjson(path)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<QuadState>> {
    read_ndjson(path)
}

pub fn write_trajectory(path: &Path, states: &[QuadState]) -> Result<()> {
    write_ndjson(path, states)
}

/// Hex SHA-256 of the geometry's parameters.
pub fn geometry_hash(geom: &RobotGeometry) -> String {
    hex::encode(Sha256::digest(geom.fingerprint()))
}

/// One training-curve point; non-finite rewards are stored as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub iteration: usize,
    pub mean_reward: Option<f64>,
    pub best_reward: Option<f64>,
    pub unstable: usize,
}

impl From<&CurvePoint> for CurveRecord {
    fn from(p: &CurvePoint) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self { iteration: p.iteration, mean_reward: finite(p.mean_reward), best_reward: finite(p.best_reward), unstable: p.unstable }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Content id, referenced by the next stage's `parent`.
    pub id: String,
    pub geometry_hash: String,
    pub dq: [f64; 12],
    pub stage: u8,
    pub parent: Option<String>,
    pub seed: u64,
    pub passed: bool,
    pub curve: Vec<CurveRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TrajectoryMetrics>,
}

impl Checkpoint {
    pub fn from_outcome(o: &TrainOutcome, seed: u64, parent: Option<&Checkpoint>, geom: &RobotGeometry) -> Self {
        let geometry_hash = geometry_hash(geom);
        let parent = parent.map(|p| p.id.clone());
        let mut h = Sha256::new();
        h.update(geometry_hash.as_bytes());
        for v in o.policy.dq {
            h.update(v.to_le_bytes());
        }
        h.update([o.policy.stage]);
        h.update(seed.to_le_bytes());
        h.update(parent.as_deref().unwrap_or("").as_bytes());
        Self {
            id: hex::encode(&h.finalize()[..8]),
            geometry_hash,
            dq: o.policy.dq,
            stage: o.policy.stage,
            parent,
            seed,
            passed: o.policy.passed,
            curve: o.curve.iter().map(CurveRecord::from).collect(),
            metrics: Some(o.evaluation.metrics.clone()),
        }
    }

    pub fn policy(&self) -> PosePolicy {
        PosePolicy {
            dq: self.dq,
            stage: self.stage,
            parent_stage: (self.stage > 1 && self.parent.is_some()).then(|| self.stage - 1),
            passed: self.passed,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| Error::Json { path: path.into(), source })?;
        fs::write(path, text + "\n").map_err(io_err(path))
    }

    /// Load a checkpoint and check it belongs to `geom`.
    pub fn load(path: &Path, geom: &RobotGeometry) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        if ck.geometry_hash != geometry_hash(geom) {
            return Err(Error::GeometryMismatch { path: path.into() });
        }
        Ok(ck)
    }
}

/// Conventional file name of a stage checkpoint inside a directory.
pub fn stage_path(dir: &Path, stage: u8) -> PathBuf {
    dir.join(format!("stage{stage}.json"))
}

/// Whichever of `stage{1,2,3}.json` exist in `dir`.
pub fn load_stage_poses(dir: &Path, geom: &RobotGeometry) -> Result<StagePoses> {
    let get = |s: u8| -> Result<Option<PosePolicy>> {
        let p = stage_path(dir, s);
        if p.exists() {
            Ok(Some(Checkpoint::load(&p, geom)?.policy()))
        } else {
            Ok(None)
        }
    };
    Ok(StagePoses { stage1: get(1)?, stage2: get(2)?, stage3: get(3)? })
}
