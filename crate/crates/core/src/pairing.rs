//! Model and prompt identities, inference parameters, and the seeded random
//! pairing that starts every session.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::GameKind;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiFlavor {
    #[default]
    OpenaiCompatible,
    Mock,
}

/// A registered model. Weights live with the provider; we only keep an id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRef {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default)]
    pub api_flavor: ApiFlavor,
    /// Mock flavor only: reference to the reply script.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    /// Upstream model name sent on the wire; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upstream_model: Option<String>,
}

impl ModelRef {
    pub fn mock(id: &str, script: &str) -> Self {
        ModelRef {
            id: id.into(),
            endpoint: None,
            auth_env: None,
            api_flavor: ApiFlavor::Mock,
            script: Some(script.into()),
            upstream_model: None,
        }
    }

    pub fn validate(&self) -> Result<(), PairingError> {
        if self.id.trim().is_empty() {
            return Err(PairingError::InvalidModel("empty model id".into()));
        }
        match self.api_flavor {
            ApiFlavor::Mock if self.script.is_none() => Err(PairingError::InvalidModel(
                alloc::format!("mock model `{}` needs a script", self.id),
            )),
            ApiFlavor::OpenaiCompatible if self.endpoint.is_none() => Err(
                PairingError::InvalidModel(alloc::format!("model `{}` needs an endpoint", self.id)),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRef {
    pub id: String,
    pub game: GameKind,
    pub body: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for InferenceParams {
    fn default() -> Self {
        InferenceParams { temperature: 0.7, top_p: 1.0, max_output_tokens: 1024, seed: None }
    }
}

impl Eq for InferenceParams {}

impl InferenceParams {
    pub fn validate(&self) -> Result<(), PairingError> {
        if !(self.temperature >= 0.0) {
            return Err(PairingError::InvalidParams("temperature must be >= 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(PairingError::InvalidParams("top_p must be in (0, 1]".into()));
        }
        if self.max_output_tokens == 0 {
            return Err(PairingError::InvalidParams("max_output_tokens must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub game: GameKind,
    pub model: ModelRef,
    pub prompt: PromptRef,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PairingError {
    #[error("no candidate games")]
    NoGames,
    #[error("no candidate models")]
    NoModels,
    #[error("no prompts registered for {0}")]
    NoPrompts(GameKind),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid inference parameters: {0}")]
    InvalidParams(String),
}

/// Uniformly picks a game, then a model, then a prompt written for that
/// game. Deterministic for a fixed seed.
pub fn pair_randomly(
    games: &[GameKind],
    models: &[ModelRef],
    prompts: &[PromptRef],
    seed: u64,
) -> Result<Pairing, PairingError> {
    if games.is_empty() {
        return Err(PairingError::NoGames);
    }
    if models.is_empty() {
        return Err(PairingError::NoModels);
    }
    for &g in games {
        if !prompts.iter().any(|p| p.game == g) {
            return Err(PairingError::NoPrompts(g));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let game = games[rng.gen_range(0..games.len())];
    let model = models[rng.gen_range(0..models.len())].clone();
    let for_game: Vec<&PromptRef> = prompts.iter().filter(|p| p.game == game).collect();
    let prompt = for_game[rng.gen_range(0..for_game.len())].clone();
    Ok(Pairing { game, model, prompt })
}
