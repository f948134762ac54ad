#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use gamearena::driver::{model_move, system_prompt};
use gamearena::gateway::{MockModel, MockScript};
use gamearena::replay::run_retrospective;
use gamearena_core::pairing::{InferenceParams, ModelRef, Pairing, PromptRef};
use gamearena_core::prompts::default_prompt_pool;
use gamearena_core::retro::RetroTrace;
use gamearena_core::{Feedback, GameConfig, GameKind, Role, SecretSource, Session, SessionId};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct FixtureTurn {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Deserialize)]
pub struct RetroRaw {
    pub round: u32,
    pub raw: String,
}

#[derive(Debug, Deserialize)]
pub struct Expect {
    pub status: String,
    #[serde(default)]
    pub rounds: Option<u32>,
    #[serde(default)]
    pub guess: Option<String>,
    #[serde(default)]
    pub verdict: Option<bool>,
}

#[derive(Debug, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub game: GameKind,
    #[serde(default)]
    pub secret: Option<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
    pub turns: Vec<FixtureTurn>,
    #[serde(default)]
    pub feedback: Option<Feedback>,
    pub expect: Expect,
    pub retro: Vec<RetroRaw>,
    #[serde(default)]
    pub expect_lists: Vec<Vec<String>>,
    #[serde(default)]
    pub expect_judgments: Vec<u8>,
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/transcripts").join(format!("{name}.json"))
}

pub fn load_fixture(name: &str) -> Fixture {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    serde_json::from_str(&text).expect("fixture parses")
}

pub fn prompt_for(game: GameKind) -> PromptRef {
    default_prompt_pool().into_iter().find(|p| p.game == game).expect("built-in prompt")
}

pub fn pairing(game: GameKind, model: &str) -> Pairing {
    Pairing { game, model: ModelRef::mock(model, "inline"), prompt: prompt_for(game) }
}

/// Number of assistant turns already in the request at each replay round.
pub fn retro_key(game: GameKind, round: u32) -> usize {
    match game {
        GameKind::Akinator | GameKind::Bluffing => round as usize,
        GameKind::Taboo => round as usize - 1,
    }
}

/// Mock model that answers the game with the fixture's model turns and the
/// replay with its recorded retrospective answers.
pub fn fixture_model(f: &Fixture) -> MockModel {
    let replies = f.turns.iter().filter(|t| t.role == Role::Model).map(|t| t.content.clone()).collect();
    let mut retro: BTreeMap<usize, String> =
        f.retro.iter().map(|r| (retro_key(f.game, r.round), r.raw.clone())).collect();
    if f.game == GameKind::Bluffing {
        retro.insert(0, "** I believe your statement is: Unknown **".into());
    }
    MockModel::new("fixture-model", MockScript { replies, retro, overrides: BTreeMap::new() })
}

pub fn fixture_session(f: &Fixture) -> Session {
    let (config, source) = match f.game {
        GameKind::Akinator => (GameConfig::akinator(), SecretSource::Withheld),
        GameKind::Taboo => {
            let word = f.secret.clone().expect("taboo fixture has a secret");
            (GameConfig::taboo([word.clone(), "Lighthouse".into()]), SecretSource::Provided(word))
        }
        GameKind::Bluffing => (GameConfig::bluffing(), SecretSource::Withheld),
    };
    let mut s = Session::new(
        SessionId(format!("fixture-{}", f.name)),
        config,
        &pairing(f.game, "fixture-model"),
        source,
        InferenceParams::default(),
        1_725_148_800_000,
    )
    .expect("session");
    s.secret_aliases = f.aliases.clone();
    s
}

/// Plays the fixture through the session rules and the model driver, then
/// runs the replay. Returns the finished session and its trace.
pub fn replay_fixture(f: &Fixture) -> (Session, RetroTrace) {
    let model = fixture_model(f);
    let pool = default_prompt_pool();
    let mut session = fixture_session(f);
    let prompt = system_prompt(&session, &pool).expect("prompt").to_string();
    for t in &f.turns {
        match t.role {
            Role::User => {
                session.apply_user_turn(&t.content).expect("user turn accepted");
            }
            Role::Model => {
                model_move(&mut session, &model, &prompt).expect("model turn accepted");
            }
        }
    }
    if let Some(fb) = f.feedback {
        session.finalize(fb, None).expect("finalize");
    }
    let trace = run_retrospective(&session, &prompt, &model, None).expect("replay");
    (session, trace)
}
