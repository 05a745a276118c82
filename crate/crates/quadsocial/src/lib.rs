//! IO, networking and command-line front end for `quadsocial-core`.
//!
//! * [`server`]: the command bridge over TCP (raw NDJSON or WebSocket).
//! * [`robot`]: mock robot client that executes commands and streams
//!   telemetry.
//! * [`formats`]: checkpoint JSON and the NDJSON record files.
//! * [`config`]: TOML configuration.

pub mod config;
pub mod corpus;
pub mod formats;
pub mod cli;
pub mod hub;
pub mod pipeline;
pub mod robot;
pub mod server;

pub use quadsocial_core as core;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Net(#[from] std::io::Error),
    #[error("{path}:{line}: {reason}")]
    Record { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("checkpoint {path} was trained on a different geometry")]
    GeometryMismatch { path: PathBuf },
    #[error("websocket: {0}")]
    WebSocket(#[from] tungstenite::Error),
    #[error(transparent)]
    Landmark(#[from] quadsocial_core::landmark::LandmarkError),
    #[error(transparent)]
    Classifier(#[from] quadsocial_core::classifier::ClassifierError),
    #[error(transparent)]
    Reward(#[from] quadsocial_core::reward::RewardError),
    #[error(transparent)]
    Train(#[from] quadsocial_core::model::TrainError),
    #[error(transparent)]
    Gesture(#[from] quadsocial_core::model::GestureError),
    #[error(transparent)]
    Trajectory(#[from] quadsocial_core::actuator::TrajectoryError),
    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
