use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appearance::DEFAULT_HISTORY;
use crate::motion::MotionParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

/// Tracker hyperparameters. Loaded from a TOML key-value file whose keys are
/// exactly the field names below; missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Largest CIoU cost accepted in the geometric stage.
    pub stage1_gate: f64,
    /// Largest cosine cost accepted in the appearance stage.
    pub stage2_gate: f64,
    /// Consecutive matches needed to confirm a new track.
    pub n_init: u32,
    /// Frames a confirmed track survives without a match.
    pub max_age: u32,
    /// Feature history capacity per track.
    pub h: usize,
    /// Padding constant added to the largest genuine cost.
    pub k: f64,
    /// Detections below this confidence are discarded.
    pub min_confidence: f64,
    /// Run per-class matching on worker threads.
    pub parallel: bool,
    /// Skip the appearance stage entirely.
    pub iou_only: bool,
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let motion = MotionParams::default();
        Self {
            stage1_gate: 1.0,
            stage2_gate: 0.4,
            n_init: 3,
            max_age: 30,
            h: DEFAULT_HISTORY,
            k: 1.0,
            min_confidence: 0.5,
            parallel: true,
            iou_only: false,
            std_weight_position: motion.std_weight_position,
            std_weight_velocity: motion.std_weight_velocity,
        }
    }
}

impl TrackerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn motion(&self) -> MotionParams {
        MotionParams {
            std_weight_position: self.std_weight_position,
            std_weight_velocity: self.std_weight_velocity,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn invalid(key: &'static str, reason: impl Into<String>) -> Result<(), ConfigError> {
            Err(ConfigError::Invalid {
                key,
                reason: reason.into(),
            })
        }
        if !(self.stage1_gate > 0.0 && self.stage1_gate <= 2.0) {
            return invalid(
                "stage1_gate",
                format!("{} is outside (0, 2]", self.stage1_gate),
            );
        }
        if !(self.stage2_gate > 0.0 && self.stage2_gate <= 2.0) {
            return invalid(
                "stage2_gate",
                format!("{} is outside (0, 2]", self.stage2_gate),
            );
        }
        if self.n_init < 1 {
            return invalid("n_init", "must be at least 1");
        }
        if self.max_age < 1 {
            return invalid("max_age", "must be at least 1");
        }
        if self.h < 1 {
            return invalid("h", "must be at least 1");
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return invalid("k", format!("{} is not a positive finite number", self.k));
        }
        if !(0.0..1.0).contains(&self.min_confidence) {
            return invalid(
                "min_confidence",
                format!("{} is outside [0, 1)", self.min_confidence),
            );
        }
        for (key, w) in [
            ("std_weight_position", self.std_weight_position),
            ("std_weight_velocity", self.std_weight_velocity),
        ] {
            if !(w > 0.0 && w.is_finite()) {
                return invalid(key, format!("{w} is not a positive finite number"));
            }
        }
        Ok(())
    }
}
