//! Moves shared by the HTTP service and the simulator, so both drive
//! sessions through exactly the same calls.

use gamearena_core::chat::transcript_messages;
use gamearena_core::game::TurnClassification;
use gamearena_core::pairing::PromptRef;
use gamearena_core::{GameError, Session};

use crate::gateway::{ChatModel, GatewayError};

#[derive(Debug, thiserror::Error)]
pub enum DriveError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("prompt `{0}` is not registered")]
    UnknownPrompt(String),
}

/// Body of the session's system prompt.
pub fn system_prompt<'a>(session: &Session, pool: &'a [PromptRef]) -> Result<&'a str, DriveError> {
    pool.iter()
        .find(|p| p.id == session.prompt_ref && p.game == session.game)
        .map(|p| p.body.as_str())
        .ok_or_else(|| DriveError::UnknownPrompt(session.prompt_ref.clone()))
}

/// Asks the model for its next move on the current transcript and applies
/// it. The session is untouched when the call fails.
pub fn model_move(
    session: &mut Session,
    model: &dyn ChatModel,
    system_prompt: &str,
) -> Result<TurnClassification, DriveError> {
    let messages = transcript_messages(session);
    let reply = model.complete(system_prompt, &messages, &session.inference_params)?;
    Ok(session.apply_model_turn(&reply)?)
}
