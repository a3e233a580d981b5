//! Application configuration file: one JSON document overriding the
//! built-in defaults of the generator, filter, and reward stages.
//! Precedence is flags > config file > defaults.

use serde::{Deserialize, Serialize};

use crate::qa::{FilterConfig, GenConfig};
use crate::reward::RewardConfig;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub filter: FilterConfig,
    pub generator: GenConfig,
    /// QA pairs to keep per (scene, task) during generation.
    pub pairs_per_task: Option<usize>,
    /// Seed attempts per (scene, task) before giving up.
    pub max_attempts_per_task: Option<usize>,
    pub reward: RewardConfig,
}

impl AppConfig {
    pub fn pairs_per_task(&self) -> usize {
        self.pairs_per_task.unwrap_or(2).max(1)
    }

    pub fn max_attempts_per_task(&self) -> usize {
        self.max_attempts_per_task.unwrap_or(16).max(1)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
