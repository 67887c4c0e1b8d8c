//! The single run configuration: scenario generation, sensor, controller,
//! episode and batch settings. Every field has a default, so a config file
//! only lists what it changes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::{ControllerConfig, ControllerKind};
use crate::error::{ConfigError, IoError};
use crate::harness::episode::EpisodeParams;
use crate::visibility::SensorSpec;
use crate::world::{Family, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BatchParams {
    pub master_seed: u64,
    pub episodes: usize,
    pub families: Vec<Family>,
    pub controllers: Vec<ControllerKind>,
    /// Worker threads for batches; `None` uses every logical core.
    pub workers: Option<usize>,
}

impl Default for BatchParams {
    fn default() -> Self {
        Self {
            master_seed: 2024,
            episodes: 200,
            families: vec![Family::Sc2],
            controllers: ControllerKind::ALL.to_vec(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub sensor: SensorSpec,
    pub controller: ControllerConfig,
    pub episode: EpisodeParams,
    pub batch: BatchParams,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(s)?;
        Ok(cfg)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::invalid(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_toml_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String, IoError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn dt(&self) -> f64 {
        self.scenario.tick
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate()?;
        self.sensor.validate()?;
        self.controller.validate(self.scenario.road.friction_mu)?;
        let b = &self.batch;
        if b.episodes == 0 {
            return Err(ConfigError::invalid("batch.episodes must be at least 1"));
        }
        if b.families.is_empty() || b.controllers.is_empty() {
            return Err(ConfigError::invalid("batch needs at least one family and one controller"));
        }
        if b.workers == Some(0) {
            return Err(ConfigError::invalid("batch.workers must be at least 1"));
        }
        if self.episode.timeout.is_some_and(|t| !(t > 0.0)) {
            return Err(ConfigError::invalid("episode.timeout must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg = RunConfig::from_toml_str("[batch]\nepisodes = 7\n[controller.thresholds]\nttc_stop = 2.0\n").unwrap();
        assert_eq!(cfg.batch.episodes, 7);
        assert_eq!(cfg.controller.thresholds.ttc_stop, 2.0);
        assert_eq!(cfg.controller.thresholds.ttc_emergency, 1.0);
    }

    #[test]
    fn unknown_family_is_a_parse_error() {
        assert!(RunConfig::from_toml_str("[batch]\nfamilies = [\"sc9\"]\n").is_err());
    }

    #[test]
    fn zero_episodes_rejected() {
        let mut cfg = RunConfig::default();
        cfg.batch.episodes = 0;
        assert!(cfg.validate().is_err());
    }
}
