//! Registry and service configuration, read from a TOML file.
//!
//! ```toml
//! data_dir = "data"
//! bind = "127.0.0.1:8080"
//!
//! [params]
//! temperature = 0.7
//! top_p = 1.0
//! max_output_tokens = 1024
//!
//! [[models]]
//! id = "gpt-4o"
//! endpoint = "https://api.openai.com/v1"
//! auth_env = "OPENAI_API_KEY"
//! rate_per_minute = 60
//!
//! [[models]]
//! id = "sim-a"
//! api_flavor = "mock"
//! script = "sim:0.9"
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use gamearena_core::pairing::{InferenceParams, ModelRef, PromptRef};
use gamearena_core::prompts::default_prompt_pool;
use gamearena_core::GameKind;
use serde::{Deserialize, Serialize};

use crate::sim::TabooBank;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// A registry entry: the model reference plus its request budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(flatten)]
    pub model: ModelRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_per_minute: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewaySettings {
    pub max_retries: u32,
    pub base_backoff_ms: u64,
    pub timeout_secs: u64,
    /// Upper bound on model calls in flight across all sessions.
    pub max_concurrency: usize,
}

impl Default for GatewaySettings {
    fn default() -> Self {
        GatewaySettings { max_retries: 3, base_backoff_ms: 1000, timeout_secs: 60, max_concurrency: 16 }
    }
}

impl GatewaySettings {
    pub fn total_timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn base_backoff(&self) -> Duration {
        Duration::from_millis(self.base_backoff_ms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArenaConfig {
    pub models: Vec<ModelEntry>,
    pub params: InferenceParams,
    /// Directory with `<game>/<name>.txt` system prompts. The built-in pool
    /// is used when unset.
    pub prompts_dir: Option<PathBuf>,
    /// Taboo vocabulary, one word per line.
    pub word_list: Option<PathBuf>,
    pub data_dir: PathBuf,
    pub bind: String,
    /// Hide the model identity until a session ends.
    pub blind_play: bool,
    pub session_expiry_secs: u64,
    pub gateway: GatewaySettings,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig {
            models: Vec::new(),
            params: InferenceParams::default(),
            prompts_dir: None,
            word_list: None,
            data_dir: PathBuf::from("data"),
            bind: "127.0.0.1:8080".into(),
            blind_play: true,
            session_expiry_secs: 24 * 60 * 60,
            gateway: GatewaySettings::default(),
        }
    }
}

/// Skill levels of the built-in simulated models.
pub const SIM_MODELS: [(&str, f64); 5] =
    [("sim-a", 0.9), ("sim-b", 0.8), ("sim-c", 0.7), ("sim-d", 0.5), ("sim-e", 0.2)];

impl ArenaConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let cfg: ArenaConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The five simulated models and default settings.
    pub fn simulation() -> Self {
        let models = SIM_MODELS
            .iter()
            .map(|(id, skill)| ModelEntry {
                model: ModelRef::mock(id, &format!("sim:{skill}")),
                rate_per_minute: None,
            })
            .collect();
        ArenaConfig { models, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = BTreeSet::new();
        for m in &self.models {
            m.model.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            if !seen.insert(m.model.id.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate model id `{}`", m.model.id)));
            }
            if m.rate_per_minute == Some(0) {
                return Err(ConfigError::Invalid(format!("model `{}`: rate_per_minute must be positive", m.model.id)));
            }
        }
        self.params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.gateway.timeout_secs == 0 || self.gateway.max_concurrency == 0 {
            return Err(ConfigError::Invalid("gateway timeout and concurrency must be positive".into()));
        }
        Ok(())
    }

    pub fn model_refs(&self) -> Vec<ModelRef> {
        self.models.iter().map(|m| m.model.clone()).collect()
    }

    pub fn prompt_pool(&self) -> Result<Vec<PromptRef>, ConfigError> {
        let Some(dir) = &self.prompts_dir else { return Ok(default_prompt_pool()) };
        let mut pool = Vec::new();
        for game in GameKind::ALL {
            let sub = dir.join(game.as_str());
            let entries = fs::read_dir(&sub).map_err(|source| ConfigError::Io { path: sub.clone(), source })?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "txt"))
                .collect();
            files.sort();
            if files.is_empty() {
                return Err(ConfigError::Invalid(format!("no prompts for {game} in {}", sub.display())));
            }
            for f in files {
                let body = fs::read_to_string(&f).map_err(|source| ConfigError::Io { path: f.clone(), source })?;
                let stem = f.file_stem().unwrap_or_default().to_string_lossy();
                pool.push(PromptRef { id: format!("{game}-{stem}"), game, body });
            }
        }
        Ok(pool)
    }

    pub fn taboo_words(&self) -> Result<Vec<String>, ConfigError> {
        let Some(path) = &self.word_list else { return Ok(TabooBank::builtin().words()) };
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
        let words: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string)
            .collect();
        if words.is_empty() {
            return Err(ConfigError::Invalid(format!("{} holds no words", path.display())));
        }
        Ok(words)
    }
}
