//! TOML configuration. Every section is optional and only needs the keys it
//! changes; reward targets are re-derived from `[geometry]` unless set.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use quadsocial_core::actuator::{ActuatorConfig, SafetyLimits, ScheduleConfig};
use quadsocial_core::classifier::ClassifierConfig;
use quadsocial_core::model::{GestureParams, ModelContext, RobotGeometry, StageSpec};
use quadsocial_core::reward::RewardConfig;

use crate::{io_err, Error, Result};

pub const DEFAULT_PORT: u16 = 9000;
pub const PORT_ENV: &str = "BRIDGE_PORT";

#[derive(Debug, Clone, Default)]
pub struct Config {
    table: toml::Table,
}

/// Recursively overwrite `base` with the keys present in `patch`.
fn merge(base: &mut toml::Value, patch: &toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

fn overlay<T: Serialize + DeserializeOwned>(base: T, patch: Option<&toml::Value>) -> Result<T> {
    let Some(patch) = patch else { return Ok(base) };
    let mut v = toml::Value::try_from(&base).map_err(|e| Error::Usage(format!("config: {e}")))?;
    merge(&mut v, patch);
    v.try_into().map_err(|e: toml::de::Error| Error::Usage(format!("config: {e}")))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        Ok(Self { table: toml::from_str(text)? })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|source| Error::Toml { path: path.into(), source })
    }

    /// Load `path` if given, defaults otherwise.
    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    fn section(&self, name: &str) -> Option<&toml::Value> {
        self.table.get(name)
    }

    pub fn geometry(&self) -> Result<RobotGeometry> {
        overlay(RobotGeometry::default(), self.section("geometry"))
    }

    pub fn reward(&self) -> Result<RewardConfig> {
        let cfg: RewardConfig = overlay(self.geometry()?.reward_config(), self.section("reward"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn classifier(&self) -> Result<ClassifierConfig> {
        let cfg: ClassifierConfig = overlay(ClassifierConfig::default(), self.section("classifier"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn schedule(&self) -> Result<ScheduleConfig> {
        overlay(ScheduleConfig::default(), self.section("schedule"))
    }

    pub fn limits(&self) -> Result<SafetyLimits> {
        overlay(SafetyLimits::default(), self.section("limits"))
    }

    pub fn actuator(&self) -> Result<ActuatorConfig> {
        let base = ActuatorConfig { limits: self.limits()?, schedule: self.schedule()?, ..Default::default() };
        overlay(base, self.section("actuator"))
    }

    pub fn gesture(&self) -> Result<GestureParams> {
        overlay(GestureParams::default(), self.section("gesture"))
    }

    /// Optimizer settings for `stage`; `[train]` applies to every stage and
    /// `[train.stageN]` to one.
    pub fn stage_spec(&self, stage: u8) -> Result<StageSpec> {
        let mut spec = overlay(StageSpec::for_stage(stage), self.section("train"))?;
        let key = format!("stage{stage}");
        spec = overlay(spec, self.section("train").and_then(|t| t.get(&key)))?;
        spec.stage = stage;
        Ok(spec)
    }

    pub fn model(&self) -> Result<ModelContext> {
        let mut ctx = ModelContext {
            geometry: self.geometry()?,
            reward: self.reward()?,
            schedule: self.schedule()?,
            limits: self.limits()?,
            ..Default::default()
        };
        if let Some(d) = self.section("train").and_then(|t| t.get("deploy_s")).and_then(toml::Value::as_float) {
            ctx.deploy_s = d;
        }
        Ok(ctx)
    }

    /// `[bridge] port`, then `$BRIDGE_PORT`, then 9000.
    pub fn port(&self) -> u16 {
        self.section("bridge")
            .and_then(|b| b.get("port"))
            .and_then(toml::Value::as_integer)
            .and_then(|p| u16::try_from(p).ok())
            .or_else(|| std::env::var(PORT_ENV).ok().and_then(|v| v.parse().ok()))
            .unwrap_or(DEFAULT_PORT)
    }
}
