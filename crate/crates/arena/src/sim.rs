//! Scripted players and simulated models for desk-scale corpora.
//!
//! The human side follows a fixed script: an object from the ontology for
//! Akinator, a clue list for Taboo, a statement with answers for Bluffing.
//! The model side ([`SimModel`]) plays all three games from the same assets
//! with a skill level in `[0, 1]`; every random choice is a hash of the
//! request, so identical requests get identical replies.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use gamearena_core::chat::{ChatMessage, ChatRole};
use gamearena_core::game::{AkinatorAnswer, UserTurnEffect, AKINATOR_OPENING};
use gamearena_core::pairing::{pair_randomly, InferenceParams, ModelRef, PairingError, PromptRef};
use gamearena_core::prompts::{retro_prompt, system_prompts};
use gamearena_core::retro::{format_judgment, JudgmentLevel};
use gamearena_core::text::{detect_keyword, normalize_item, words};
use gamearena_core::{
    Feedback, GameConfig, GameError, GameKind, Prediction, SecretSource, Session, SessionId, Status,
};
use gamearena_core::game::Awaiting;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::driver::{model_move, system_prompt, DriveError};
use crate::gateway::{retro_request_game, validate_messages, ChatModel, Gateway, GatewayError};
use crate::replay::run_retrospective;
use crate::store::{SessionRecord, Store, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid script: {0}")]
    Script(String),
    #[error(transparent)]
    Drive(#[from] DriveError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub id: String,
    pub question: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyObject {
    pub name: String,
    /// Attributes that hold; every other attribute is false.
    pub attributes: BTreeSet<String>,
}

/// Objects described by boolean attributes, each attribute phrased as a
/// yes/no question.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    pub attributes: Vec<Attribute>,
    pub objects: Vec<OntologyObject>,
}

fn strip_question_header(text: &str) -> &str {
    let t = text.trim_start().trim_start_matches('*').trim_start();
    if t.get(..8).is_some_and(|h| h.eq_ignore_ascii_case("question")) {
        if let Some(i) = t.find(':') {
            return t[i + 1..].trim_start_matches('*').trim();
        }
    }
    text.trim()
}

impl Ontology {
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../assets/ontology.json")).expect("built-in ontology parses")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ids: BTreeSet<&str> = self.attributes.iter().map(|a| a.id.as_str()).collect();
        if ids.len() != self.attributes.len() {
            return Err(SimError::Script("duplicate attribute id".into()));
        }
        let mut names = BTreeSet::new();
        for o in &self.objects {
            if !names.insert(normalize_item(&o.name)) {
                return Err(SimError::Script(format!("duplicate object `{}`", o.name)));
            }
            if let Some(a) = o.attributes.iter().find(|a| !ids.contains(a.as_str())) {
                return Err(SimError::Script(format!("object `{}` uses unknown attribute `{a}`", o.name)));
            }
        }
        Ok(())
    }

    pub fn object(&self, name: &str) -> Option<&OntologyObject> {
        let key = normalize_item(name);
        self.objects.iter().find(|o| normalize_item(&o.name) == key)
    }

    /// Index of the attribute a question asks about.
    pub fn attribute_for(&self, question: &str) -> Option<usize> {
        let q = strip_question_header(question).to_lowercase();
        self.attributes.iter().position(|a| q.contains(&a.question.to_lowercase()))
    }

    pub fn holds(&self, object: &OntologyObject, attr: usize) -> bool {
        object.attributes.contains(&self.attributes[attr].id)
    }

    /// Answer of `item` to `question`, when both are known.
    pub fn classify(&self, question: &str, item: &str) -> Option<bool> {
        let a = self.attribute_for(question)?;
        Some(self.holds(self.object(item)?, a))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabooEntry {
    pub word: String,
    pub clues: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TabooBank(pub Vec<TabooEntry>);

const TABOO_CHAR_LIMIT: usize = 140;

impl TabooBank {
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../assets/taboo_words.json")).expect("built-in word bank parses")
    }

    pub fn words(&self) -> Vec<String> {
        self.0.iter().map(|e| e.word.clone()).collect()
    }

    pub fn entry(&self, word: &str) -> Option<&TabooEntry> {
        self.0.iter().find(|e| e.word.eq_ignore_ascii_case(word))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for e in &self.0 {
            validate_clues(&e.word, &e.clues)?;
        }
        Ok(())
    }
}

/// Clues must fit the character budget and never contain the word.
pub fn validate_clues(word: &str, clues: &[String]) -> Result<(), SimError> {
    if clues.is_empty() {
        return Err(SimError::Script(format!("no clues for `{word}`")));
    }
    for c in clues {
        if c.trim().is_empty() || c.chars().count() > TABOO_CHAR_LIMIT {
            return Err(SimError::Script(format!("clue for `{word}` is empty or over {TABOO_CHAR_LIMIT} characters")));
        }
        if detect_keyword(c, word) {
            return Err(SimError::Script(format!("clue `{c}` contains the secret `{word}`")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BluffEntry {
    pub statement: String,
    pub truthful: bool,
    pub answers: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BluffBank(pub Vec<BluffEntry>);

impl BluffBank {
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../assets/bluffing_statements.json")).expect("built-in statements parse")
    }

    pub fn entry(&self, statement: &str) -> Option<&BluffEntry> {
        self.0.iter().find(|e| e.statement.trim() == statement.trim())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for e in &self.0 {
            if e.statement.trim().is_empty() || e.answers.is_empty() || e.answers.iter().any(|a| a.trim().is_empty()) {
                return Err(SimError::Script(format!("statement `{}` is incomplete", e.statement)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimAssets {
    pub ontology: Ontology,
    pub taboo: TabooBank,
    pub bluff: BluffBank,
}

impl SimAssets {
    pub fn builtin() -> Self {
        SimAssets { ontology: Ontology::builtin(), taboo: TabooBank::builtin(), bluff: BluffBank::builtin() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.ontology.validate()?;
        self.taboo.validate()?;
        self.bluff.validate()
    }
}

/// The game a system prompt is written for.
pub fn detect_game(system_prompt: &str) -> Option<GameKind> {
    if let Some(g) = GameKind::ALL.into_iter().find(|g| system_prompts(*g).contains(&system_prompt)) {
        return Some(g);
    }
    let lower = system_prompt.to_lowercase();
    if lower.contains("twenty questions") || lower.contains("secret object") {
        Some(GameKind::Akinator)
    } else if lower.contains("word-guessing") || lower.contains("target word") {
        Some(GameKind::Taboo)
    } else if lower.contains("lie detection") || lower.contains("statement") {
        Some(GameKind::Bluffing)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HumanScript {
    Akinator { object: String },
    Taboo { word: String, clues: Vec<String> },
    Bluffing { statement: String, truthful: bool, answers: Vec<String> },
}

/// What the scripted player does next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HumanAction {
    Say(String),
    Feedback(Feedback, Option<String>),
    GiveUp,
}

/// A deterministic stand-in for the human player.
#[derive(Debug)]
pub struct ScriptedHuman {
    pub script: HumanScript,
    /// Chance that an Akinator answer is softened to "Probably ...".
    pub noise: f64,
    ontology: Arc<Ontology>,
    rng: ChaCha8Rng,
    cursor: usize,
}

impl ScriptedHuman {
    pub fn new(script: HumanScript, ontology: Arc<Ontology>, noise: f64, seed: u64) -> Result<Self, SimError> {
        match &script {
            HumanScript::Akinator { object } if ontology.object(object).is_none() => {
                return Err(SimError::Script(format!("`{object}` is not in the ontology")))
            }
            HumanScript::Taboo { word, clues } => validate_clues(word, clues)?,
            HumanScript::Bluffing { statement, answers, .. } if statement.trim().is_empty() || answers.is_empty() => {
                return Err(SimError::Script("bluffing script needs a statement and answers".into()))
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&noise) {
            return Err(SimError::Script("noise must lie in [0, 1]".into()));
        }
        Ok(ScriptedHuman { script, noise, ontology, rng: ChaCha8Rng::seed_from_u64(seed), cursor: 0 })
    }

    /// Draws a script that fits `session`: a random object or statement, or
    /// the clue list of the session's Taboo word.
    pub fn for_session(session: &Session, assets: &SimAssets, noise: f64, seed: u64) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let script = match session.game {
            GameKind::Akinator => {
                let o = &assets.ontology.objects[rng.gen_range(0..assets.ontology.objects.len())];
                HumanScript::Akinator { object: o.name.clone() }
            }
            GameKind::Taboo => {
                let word = session.secret.target_text().unwrap_or_default();
                let e = assets
                    .taboo
                    .entry(word)
                    .ok_or_else(|| SimError::Script(format!("no clues for `{word}`")))?;
                HumanScript::Taboo { word: e.word.clone(), clues: e.clues.clone() }
            }
            GameKind::Bluffing => {
                let e = &assets.bluff.0[rng.gen_range(0..assets.bluff.0.len())];
                HumanScript::Bluffing { statement: e.statement.clone(), truthful: e.truthful, answers: e.answers.clone() }
            }
        };
        Self::new(script, Arc::new(assets.ontology.clone()), noise, rng.next_u64())
    }

    fn next_scripted(&mut self, lines: &[String]) -> HumanAction {
        let a = lines.get(self.cursor).cloned();
        self.cursor += 1;
        a.map_or(HumanAction::GiveUp, HumanAction::Say)
    }

    pub fn act(&mut self, session: &Session) -> HumanAction {
        let last_model = session.turns.iter().rev().find(|t| t.role == gamearena_core::Role::Model);
        match (self.script.clone(), session.awaiting) {
            (HumanScript::Akinator { .. }, Awaiting::User) if session.turns.is_empty() => {
                HumanAction::Say(AKINATOR_OPENING.into())
            }
            (HumanScript::Akinator { object }, Awaiting::User) => {
                let question = last_model.map_or("", |t| t.content.as_str());
                let truth = self
                    .ontology
                    .attribute_for(question)
                    .zip(self.ontology.object(&object))
                    .map(|(a, o)| self.ontology.holds(o, a));
                let soft = self.rng.gen_bool(self.noise);
                let answer = match (truth, soft) {
                    (Some(true), false) => AkinatorAnswer::Yes,
                    (Some(true), true) => AkinatorAnswer::ProbablyYes,
                    (Some(false), false) => AkinatorAnswer::No,
                    (Some(false), true) => AkinatorAnswer::ProbablyNo,
                    (None, _) => AkinatorAnswer::DontKnow,
                };
                HumanAction::Say(answer.as_str().into())
            }
            (HumanScript::Akinator { object }, Awaiting::Feedback) => match &session.pending_prediction {
                Some(Prediction::Akinator(guess)) if normalize_item(guess) == normalize_item(&object) => {
                    HumanAction::Feedback(Feedback::ConfirmedCorrect, None)
                }
                Some(_) if session.rounds_remaining() > 0 => HumanAction::Say(AkinatorAnswer::No.as_str().into()),
                _ => HumanAction::Feedback(Feedback::ConfirmedIncorrect, Some(object)),
            },
            (HumanScript::Taboo { clues, .. }, Awaiting::User) => self.next_scripted(&clues),
            (HumanScript::Bluffing { statement, .. }, Awaiting::User) if session.turns.is_empty() => {
                HumanAction::Say(statement)
            }
            (HumanScript::Bluffing { answers, .. }, Awaiting::User) => self.next_scripted(&answers),
            (HumanScript::Bluffing { truthful, .. }, Awaiting::Feedback) => match session.pending_prediction {
                Some(Prediction::Bluffing(v)) if v == truthful => HumanAction::Feedback(Feedback::ConfirmedCorrect, None),
                Some(_) => HumanAction::Feedback(Feedback::ConfirmedIncorrect, None),
                None => HumanAction::Feedback(
                    Feedback::ConfirmedIncorrect,
                    Some(if truthful { "True" } else { "False" }.into()),
                ),
            },
            _ => HumanAction::GiveUp,
        }
    }
}

/// Plays `session` to a terminal state through the shared driver. A player
/// who runs out of script, or a game that exceeds `max_steps`, ends the
/// session as abandoned.
pub fn run_simulated_session(
    mut session: Session,
    human: &mut ScriptedHuman,
    model: &dyn ChatModel,
    system_prompt: &str,
    max_steps: usize,
) -> Result<Session, SimError> {
    for _ in 0..max_steps {
        match session.awaiting {
            Awaiting::Nothing => return Ok(session),
            Awaiting::Model => {
                model_move(&mut session, model, system_prompt)?;
            }
            Awaiting::User | Awaiting::Feedback => match human.act(&session) {
                HumanAction::Say(text) => {
                    let effect = session.apply_user_turn(&text)?;
                    debug_assert!(effect != UserTurnEffect::Forfeit || session.is_finished());
                }
                HumanAction::Feedback(fb, reveal) => {
                    session.finalize(fb, reveal.as_deref())?;
                }
                HumanAction::GiveUp => {
                    session.abandon()?;
                }
            },
        }
    }
    if !session.is_finished() {
        session.abandon()?;
    }
    Ok(session)
}

const STOPWORDS: [&str; 24] = [
    "that", "this", "with", "from", "your", "they", "them", "have", "what", "when", "where", "which", "while",
    "into", "over", "most", "some", "every", "often", "there", "their", "famous", "called", "part",
];

fn content_words(text: &str) -> BTreeSet<String> {
    words(text)
        .into_iter()
        .map(|w| w.to_lowercase())
        .filter(|w| w.chars().count() >= 4 && !STOPWORDS.contains(&w.as_str()))
        .collect()
}

const BLUFF_QUESTIONS: [&str; 5] = [
    "Can you tell me more about when this happened or how it started?",
    "Who else was involved, and what did they do?",
    "What was the hardest part of it for you?",
    "What details do you remember most clearly?",
    "How has this shaped your daily routine?",
];

const HEDGES: [&str; 8] =
    ["maybe", "i think", "i guess", "not sure", "probably", "hard to say", "don't remember", "don't know"];

/// Evidence in one answer: positive for concrete detail, negative for
/// hedging.
pub fn answer_evidence(answer: &str) -> i32 {
    let lower = answer.to_lowercase();
    let hedges = HEDGES.iter().filter(|h| lower.contains(*h)).count() as i32;
    let numbers = words(answer).iter().filter(|w| w.chars().any(|c| c.is_ascii_digit())).count() as i32;
    let names = answer
        .split_whitespace()
        .skip(1)
        .filter(|w| w.chars().next().is_some_and(char::is_uppercase) && w != &"I")
        .count() as i32;
    let specifics = numbers + names;
    specifics.min(2) - hedges.min(2)
}

fn level_for(score: i32) -> u8 {
    match score {
        s if s >= 3 => 1,
        s if s >= 1 => 2,
        0 => 3,
        s if s >= -2 => 4,
        _ => 5,
    }
}

/// A simulated model of a given skill.
#[derive(Debug, Clone)]
pub struct SimModel {
    id: String,
    skill: f64,
    assets: Arc<SimAssets>,
}

struct Req<'a> {
    system: &'a str,
    messages: &'a [ChatMessage],
    seed: u64,
}

impl SimModel {
    pub fn new(id: &str, skill: f64, assets: Arc<SimAssets>) -> Self {
        SimModel { id: id.to_string(), skill: skill.clamp(0.0, 1.0), assets }
    }

    pub fn skill(&self) -> f64 {
        self.skill
    }

    /// Uniform draw in [0, 1) fixed by the model, the salt and `parts`.
    fn unit(&self, seed: u64, salt: &str, parts: &[&str]) -> f64 {
        let mut h = Sha256::new();
        h.update(self.id.as_bytes());
        h.update(seed.to_le_bytes());
        h.update(salt.as_bytes());
        for p in parts {
            h.update(b"\0");
            h.update(p.as_bytes());
        }
        let d = h.finalize();
        let mut b = [0u8; 8];
        b.copy_from_slice(&d[..8]);
        (u64::from_le_bytes(b) >> 11) as f64 / (1u64 << 53) as f64
    }

    fn chance(&self, seed: u64, salt: &str, parts: &[&str], p: f64) -> bool {
        self.unit(seed, salt, parts) < p
    }

    fn blunder(&self) -> f64 {
        1.0 - self.skill
    }

    // Akinator

    /// Candidates closest to the answers the model keeps in mind, best
    /// first, each with its mismatch penalty.
    fn akinator_candidates(&self, req: &Req<'_>) -> Vec<(usize, String)> {
        let onto = &self.assets.ontology;
        let mut constraints: Vec<(usize, AkinatorAnswer)> = Vec::new();
        let mut rejected = BTreeSet::new();
        let msgs = req.messages;
        for i in (1..msgs.len()).step_by(2) {
            let Some(answer) = msgs.get(i + 1).and_then(|m| AkinatorAnswer::parse(&m.content)) else { continue };
            let q = &msgs[i].content;
            if let Some(Prediction::Akinator(g)) = gamearena_core::game::parse_guess(q, GameKind::Akinator) {
                rejected.insert(normalize_item(&g));
            } else if let Some(a) = onto.attribute_for(q) {
                // A weak model sometimes misreads an answer as its opposite.
                let id = &onto.attributes[a].id;
                let answer = match (answer, self.chance(req.seed, "misread", &[id], 0.2 * self.blunder())) {
                    (AkinatorAnswer::Yes, true) => AkinatorAnswer::No,
                    (AkinatorAnswer::No, true) => AkinatorAnswer::Yes,
                    (a, _) => a,
                };
                constraints.push((a, answer));
            }
        }
        // A contradicted firm answer costs 2, a contradicted soft one 1. The
        // closest objects stay in play even when none fits every answer.
        let mut scored: Vec<(usize, f64, String)> = Vec::new();
        for o in &onto.objects {
            if rejected.contains(&normalize_item(&o.name)) {
                continue;
            }
            let mut penalty = 0usize;
            for &(a, ans) in &constraints {
                let holds = onto.holds(o, a);
                penalty += match ans {
                    AkinatorAnswer::Yes | AkinatorAnswer::No if holds != ans.is_affirmative() => 2,
                    AkinatorAnswer::ProbablyYes | AkinatorAnswer::ProbablyNo if holds != ans.is_affirmative() => 1,
                    _ => 0,
                };
            }
            scored.push((penalty, self.unit(req.seed, "order", &[&o.name]), o.name.clone()));
        }
        let floor = scored.iter().map(|c| c.0).min().unwrap_or(0);
        scored.retain(|c| c.0 <= floor + 1);
        scored.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        scored.into_iter().map(|(s, _, n)| (s, n)).collect()
    }

    fn akinator_move(&self, req: &Req<'_>) -> String {
        let onto = &self.assets.ontology;
        let n = req.messages.iter().filter(|m| m.role == ChatRole::Assistant).count() + 1;
        let cands = self.akinator_candidates(req);
        let best: Vec<&str> = match cands.first() {
            Some((s0, _)) => cands.iter().filter(|(s, _)| s == s0).map(|(_, n)| n.as_str()).collect(),
            None => Vec::new(),
        };
        let asked: BTreeSet<usize> = req
            .messages
            .iter()
            .filter(|m| m.role == ChatRole::Assistant)
            .filter_map(|m| onto.attribute_for(&m.content))
            .collect();
        let open: Vec<usize> = (0..onto.attributes.len()).filter(|a| !asked.contains(a)).collect();
        let best_objs: Vec<&OntologyObject> = best.iter().filter_map(|n| onto.object(n)).collect();
        let split = |a: usize| {
            let yes = best_objs.iter().filter(|o| onto.holds(o, a)).count();
            yes.abs_diff(best_objs.len() - yes)
        };
        let informative: Vec<usize> = open.iter().copied().filter(|&a| split(a) < best.len()).collect();
        let guess = |name: &str| {
            let article = if name.starts_with(['A', 'E', 'I', 'O', 'U']) { "an" } else { "a" };
            format!("Question {n}: This is a guess -- are you thinking of {article} {}?", name.to_lowercase())
        };
        if best.is_empty() {
            let a = open.first().copied().unwrap_or(0);
            return format!("Question {n}: {}", onto.attributes[a].question);
        }
        if best.len() == 1 || informative.is_empty() || n >= 20 {
            return guess(best[0]);
        }
        let pick = if self.chance(req.seed, "wander", &[&n.to_string(), &best.join("|")], self.blunder()) {
            let i = (self.unit(req.seed, "wander-pick", &[&n.to_string()]) * open.len() as f64) as usize;
            open[i.min(open.len() - 1)]
        } else {
            *informative.iter().min_by_key(|&&a| (split(a), a)).unwrap()
        };
        format!("Question {n}: {}", onto.attributes[pick].question)
    }

    fn akinator_retro(&self, req: &Req<'_>) -> String {
        let cands = self.akinator_candidates(req);
        let mut names: Vec<String> = cands.iter().map(|(_, n)| n.clone()).take(16).collect();
        self.jitter(req, &mut names);
        let mut out: String = names.iter().map(|n| format!("** Object: {n} **\n")).collect();
        out.push_str(&format!(
            "** Additional Information: {} objects fit the answers so far. **",
            cands.len()
        ));
        out
    }

    /// Low skill occasionally swaps neighbours in a ranked list.
    fn jitter(&self, req: &Req<'_>, items: &mut [String]) {
        for i in 1..items.len() {
            if self.chance(req.seed, "jitter", &[&items[i - 1], &items[i]], 0.5 * self.blunder()) {
                items.swap(i - 1, i);
            }
        }
    }

    // Taboo

    fn taboo_ranking(&self, req: &Req<'_>) -> Vec<(i64, String)> {
        let heard: BTreeSet<String> = req
            .messages
            .iter()
            .filter(|m| m.role == ChatRole::User)
            .flat_map(|m| content_words(&m.content))
            .collect();
        let mut scored: Vec<(i64, f64, String)> = self
            .assets
            .taboo
            .0
            .iter()
            .map(|e| {
                // Stronger models recognise more of the words tied to each target.
                let recall = 0.15 + 0.35 * self.skill;
                let known: BTreeSet<String> = e
                    .clues
                    .iter()
                    .flat_map(|c| content_words(c))
                    .filter(|t| self.chance(req.seed, "vocab", &[&e.word, t], recall))
                    .collect();
                let s = heard.intersection(&known).count() as i64;
                (s, self.unit(req.seed, "taboo-order", &[&e.word]), e.word.clone())
            })
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)));
        let mut out: Vec<(i64, String)> = scored.into_iter().map(|(s, _, w)| (s, w)).collect();
        let round = req.messages.iter().filter(|m| m.role == ChatRole::User).count().to_string();
        if out.len() > 1 && self.chance(req.seed, "taboo-confuse", &[&round], 0.5 * self.blunder()) {
            out.swap(0, 1);
        }
        out
    }

    fn taboo_move(&self, req: &Req<'_>) -> String {
        let round = req.messages.iter().filter(|m| m.role == ChatRole::User).count();
        let ranking = self.taboo_ranking(req);
        let (top_score, top) = ranking[0].clone();
        let margin = top_score - ranking.get(1).map_or(0, |r| r.0);
        if (top_score >= 3 && margin >= 2) || round >= 5 {
            return format!("My guess of the word is: {top}");
        }
        if self.chance(req.seed, "slip", &[&round.to_string(), &top], 0.35 * self.blunder()) {
            return format!("Hmm, that reminds me of {top}, though I cannot be sure yet.");
        }
        "Interesting. I would answer that it depends on the situation you describe.".into()
    }

    fn taboo_retro(&self, req: &Req<'_>) -> String {
        let ranking = self.taboo_ranking(req);
        let positive = ranking.iter().filter(|(s, _)| *s > 0).count();
        let confident = ranking[0].0 >= 3 && ranking.get(1).is_some_and(|r| r.0 + 2 <= ranking[0].0);
        let take = if confident { 1 } else { positive.clamp(5, 16) };
        let mut words: Vec<String> = ranking.into_iter().take(take).map(|(_, w)| w).collect();
        self.jitter(req, &mut words);
        let mut out: String = words.iter().map(|w| format!("** Word: {w} **\n")).collect();
        out.push_str("** Additional Information: ranked by overlap with the clues so far. **");
        out
    }

    // Bluffing

    fn bluff_score(&self, req: &Req<'_>) -> (usize, i32) {
        let answers: Vec<&ChatMessage> = req.messages.iter().filter(|m| m.role == ChatRole::User).skip(1).collect();
        (answers.len(), answers.iter().map(|m| answer_evidence(&m.content)).sum())
    }

    fn bluff_move(&self, req: &Req<'_>) -> String {
        let asked = req.messages.iter().filter(|m| m.role == ChatRole::Assistant).count();
        if asked < BLUFF_QUESTIONS.len() {
            return format!("Question {}: {}", asked + 1, BLUFF_QUESTIONS[asked]);
        }
        let statement = req.messages.first().map_or("", |m| m.content.as_str());
        if self.chance(req.seed, "no-verdict", &[statement], 0.2 * self.blunder()) {
            return "Thank you for your answers. I could not settle on a conclusion.".into();
        }
        let (_, score) = self.bluff_score(req);
        let mut verdict = score >= 0;
        if self.chance(req.seed, "flip", &[statement], 0.5 * self.blunder()) {
            verdict = !verdict;
        }
        format!("I believe your statement is: {}", if verdict { "True" } else { "False" })
    }

    fn bluff_retro(&self, req: &Req<'_>) -> String {
        let (seen, score) = self.bluff_score(req);
        let mut level = level_for(score) as i32;
        let key = seen.to_string();
        let statement = req.messages.first().map_or("", |m| m.content.as_str());
        if seen > 0 && self.chance(req.seed, "waver", &[statement, &key], 0.4 * self.blunder()) {
            let dir = if self.unit(req.seed, "waver-dir", &[statement, &key]) < 0.5 { -1 } else { 1 };
            level = (level + dir).clamp(1, 5);
        }
        let level = JudgmentLevel::new(level as u8).unwrap_or(JudgmentLevel::UNKNOWN);
        format!("{}\n** Additional Information: {seen} answers reviewed. **", format_judgment(level))
    }
}

impl ChatModel for SimModel {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(
        &self,
        system_prompt: &str,
        messages: &[ChatMessage],
        params: &InferenceParams,
    ) -> Result<String, GatewayError> {
        validate_messages(messages)?;
        let seed = params.seed.unwrap_or(0);
        if let Some(game) = retro_request_game(messages) {
            let mut history = messages.to_vec();
            if let Some(last) = history.last_mut() {
                last.content = last.content.replace(retro_prompt(game), "").trim_end().to_string();
            }
            if history.last().is_some_and(|m| m.content.is_empty()) {
                history.pop();
            }
            let req = Req { system: system_prompt, messages: &history, seed };
            return Ok(match game {
                GameKind::Akinator => self.akinator_retro(&req),
                GameKind::Taboo => self.taboo_retro(&req),
                GameKind::Bluffing => self.bluff_retro(&req),
            });
        }
        let game = detect_game(system_prompt)
            .ok_or_else(|| GatewayError::InvalidRequest("cannot tell which game the prompt is for".into()))?;
        let req = Req { system: system_prompt, messages, seed };
        let _ = req.system;
        Ok(match game {
            GameKind::Akinator => self.akinator_move(&req),
            GameKind::Taboo => self.taboo_move(&req),
            GameKind::Bluffing => self.bluff_move(&req),
        })
    }
}

/// First `created_at` of a simulated corpus: 2024-09-01T00:00:00Z.
pub const SIM_EPOCH_MS: i64 = 1_725_148_800_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions {
    pub sessions: usize,
    pub seed: u64,
    pub games: Vec<GameKind>,
    pub noise: f64,
    pub max_steps: usize,
    /// Alternate subset tags over the corpus, for cross-subset comparison.
    pub subsets: Vec<String>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { sessions: 50, seed: 1, games: GameKind::ALL.to_vec(), noise: 0.1, max_steps: 200, subsets: Vec::new() }
    }
}

/// Everything a simulation run needs besides the store.
pub struct SimEnv<'a> {
    pub models: &'a [ModelRef],
    pub prompts: &'a [PromptRef],
    pub gateway: &'a Gateway,
    pub assets: &'a SimAssets,
    pub params: &'a InferenceParams,
}

/// Runs one seeded session per index; ids and timestamps derive from the
/// master seed so reruns are byte-identical.
pub fn simulate_corpus(env: &SimEnv<'_>, opts: &SimOptions) -> Result<Vec<Session>, SimError> {
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let words = env.assets.taboo.words();
    let mut out = Vec::with_capacity(opts.sessions);
    for i in 0..opts.sessions {
        let s = master.next_u64();
        let pairing = pair_randomly(&opts.games, env.models, env.prompts, s)?;
        let config = match pairing.game {
            GameKind::Taboo => GameConfig::taboo(words.clone()),
            g => GameConfig::default_for(g),
        };
        let source = match pairing.game {
            GameKind::Taboo => SecretSource::Draw { seed: s },
            _ => SecretSource::Withheld,
        };
        let params = InferenceParams { seed: Some(s), ..env.params.clone() };
        let id = SessionId(format!("sim-{}-{i:05}", opts.seed));
        let created_at = SIM_EPOCH_MS + i as i64 * 60_000;
        let session = Session::new(id, config, &pairing, source, params, created_at)?;
        let mut human = ScriptedHuman::for_session(&session, env.assets, opts.noise, s ^ 0x9e37_79b9_7f4a_7c15)?;
        let model = env.gateway.get(&pairing.model.id)?;
        let prompt = system_prompt(&session, env.prompts)?;
        out.push(run_simulated_session(session, &mut human, model.as_ref(), prompt, opts.max_steps)?);
    }
    Ok(out)
}

/// Simulates and stores a corpus; returns the number of sessions written.
pub fn simulate_into(store: &Store, env: &SimEnv<'_>, opts: &SimOptions) -> Result<usize, SimError> {
    let sessions = simulate_corpus(env, opts)?;
    let n = sessions.len();
    for (i, s) in sessions.into_iter().enumerate() {
        let tag = (!opts.subsets.is_empty()).then(|| opts.subsets[i % opts.subsets.len()].clone());
        store.append(SessionRecord::new(s, tag))?;
    }
    Ok(n)
}

/// Replays every finished session that has no complete trace yet. Returns
/// (replayed, failed points).
pub fn retro_corpus(
    store: &Store,
    gateway: &Gateway,
    prompts: &[PromptRef],
    filter: &crate::store::CorpusFilter,
) -> Result<(usize, usize), SimError> {
    let traces = store.load_traces()?;
    let mut done = 0;
    let mut failed = 0;
    for rec in store.load(filter)? {
        let s = &rec.session;
        if !matches!(s.status, Status::ModelWon | Status::UserWon) {
            continue;
        }
        let existing = traces.get(&s.session_id).map(|t| &t.trace);
        if existing.is_some_and(|t| !t.has_failures()) {
            continue;
        }
        let model = gateway.get(&s.model_ref)?;
        let prompt = system_prompt(s, prompts)?;
        let trace = run_retrospective(s, prompt, model.as_ref(), existing)
            .map_err(|e| SimError::Script(e.to_string()))?;
        failed += trace.quality().1;
        store.append_trace(&trace, s.created_at)?;
        done += 1;
    }
    Ok((done, failed))
}

/// Ontology answers keyed by (question, item), for disparity checks.
pub fn ontology_classifier(onto: &Ontology) -> impl FnMut(&str, &str) -> Option<bool> + '_ {
    move |q, item| onto.classify(q, item)
}

/// Per-game counts of terminal statuses, for summaries.
pub fn status_counts(sessions: &[Session]) -> BTreeMap<(GameKind, &'static str), usize> {
    let mut m = BTreeMap::new();
    for s in sessions {
        let k = match s.status {
            Status::Active => "active",
            Status::ModelWon => "model_won",
            Status::UserWon => "user_won",
            Status::Abandoned => "abandoned",
        };
        *m.entry((s.game, k)).or_default() += 1;
    }
    m
}
