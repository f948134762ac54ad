//! Runs the retrospective replay of a finished session against its model.

use gamearena_core::retro::{replay_points, RetroEntry, RetroError, RetroTrace};
use gamearena_core::Session;

use crate::gateway::ChatModel;

/// Replays every point of `session` with the stored system prompt, history
/// and inference parameters.
///
/// Entries already present in `existing` and not marked failed are kept, so
/// an interrupted run resumes where it stopped. A failed call leaves a
/// failure marker for that round and the run moves on.
pub fn run_retrospective(
    session: &Session,
    system_prompt: &str,
    model: &dyn ChatModel,
    existing: Option<&RetroTrace>,
) -> Result<RetroTrace, RetroError> {
    let mut trace = RetroTrace::new(session);
    for point in replay_points(session, system_prompt)? {
        let kept = existing
            .and_then(|t| t.entries.iter().find(|e| e.round == point.round && !e.is_failed()))
            .cloned();
        if let Some(e) = kept {
            trace.entries.push(e);
            continue;
        }
        let msgs = point.request_messages();
        let entry = match model.complete(system_prompt, &msgs[1..], &session.inference_params) {
            Ok(raw) => RetroEntry::parse(session.game, point.round, raw),
            Err(e) => {
                tracing::warn!(session = %session.session_id, round = point.round, error = %e, "replay call failed");
                RetroEntry::failed(point.round, e.to_string())
            }
        };
        trace.entries.push(entry);
    }
    Ok(trace)
}
