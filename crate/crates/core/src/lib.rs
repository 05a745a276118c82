//! Core algorithms for a gesture-driven quadruped companion robot.
//!
//! Everything here is pure computation over `alloc` types so it can run on
//! a host, inside a simulator, or on an embedded controller:
//!
//! - [`landmark`]: hand/face landmark records and their NDJSON replay format
//! - [`classifier`]: rule-based hand gestures, windowed nod/shake detection, debouncing
//! - [`bridge`]: gesture-to-command mapping, change/cooldown gating, line framing
//! - [`actuator`]: mock quadruped endpoint with preemption and posture locking
//! - [`reward`]: staged reward terms, stability gate and trajectory metrics
//! - [`model`]: quasi-static quadruped, equilibrium solver, curriculum trainer
//! - [`synth`]: deterministic synthetic landmark generator used for fixtures
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod actuator;
pub mod bridge;
pub mod classifier;
mod geom;
pub mod landmark;
pub mod model;
pub mod reward;
pub mod synth;

pub use bridge::{Command, CommandKind, ControlPath};
pub use classifier::{ClassifierConfig, Gesture, GestureEvent};
pub use landmark::{FaceFrame, Frame, HandFrame, Landmark, NormalizedHand};
pub use reward::{QuadState, RewardBreakdown, RewardConfig, TrajectoryMetrics};
