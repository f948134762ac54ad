use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::parse::{parse_guess, parse_question_number, AkinatorAnswer};
use super::{accepted_answers, GameConfig, GameError, GameKind, Prediction, Role, Secret, Turn, TurnKind};
use crate::pairing::{InferenceParams, Pairing};
use crate::text::{detect_keyword_with, normalize_item};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl SessionId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SessionId {
    fn from(s: &str) -> Self {
        SessionId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    ModelWon,
    UserWon,
    Abandoned,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Active
    }

    /// Allowed transitions: active to any terminal status, nothing else.
    pub fn can_transition_to(self, next: Status) -> bool {
        self == Status::Active && next != Status::Active
    }
}

/// Whose move the active session is waiting for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Awaiting {
    User,
    Model,
    /// A prediction awaits confirmation, or the round limit was reached.
    Feedback,
    Nothing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Model,
    User,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    ConfirmedCorrect,
    ConfirmedIncorrect,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub winner: Winner,
    /// 1 iff the model won.
    pub win_indicator: u8,
    pub rounds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revealed_secret: Option<String>,
    /// Absent for Taboo, whose outcome is decided by keyword detection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_feedback: Option<Feedback>,
}

impl Outcome {
    fn new(winner: Winner, rounds: u32) -> Self {
        Outcome {
            winner,
            win_indicator: u8::from(winner == Winner::Model),
            rounds,
            revealed_secret: None,
            user_feedback: None,
        }
    }
}

/// Where the session secret comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SecretSource {
    /// The player keeps it private (Akinator object, Bluffing statement
    /// entered as the first message).
    Withheld,
    /// Known up front: Akinator object, Taboo word, or Bluffing statement.
    Provided(String),
    /// Seeded uniform draw from the Taboo word list.
    Draw { seed: u64 },
}

/// What applying a user message did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UserTurnEffect {
    Accepted,
    /// A pending Akinator guess was answered negatively; play continues.
    GuessRejected,
    /// Taboo: the message contained the secret word and the user forfeits.
    Forfeit,
}

/// Classification of one model output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TurnClassification {
    pub kind: TurnKind,
    pub prediction: Option<Prediction>,
    pub question_number: Option<u32>,
    pub numbering_ok: bool,
    pub uttered_secret: bool,
    /// Set when this turn ended the session.
    pub ended: Option<Status>,
}

/// One game instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: SessionId,
    pub game: GameKind,
    pub config: GameConfig,
    pub model_ref: String,
    pub prompt_ref: String,
    pub inference_params: InferenceParams,
    pub secret: Secret,
    pub turns: Vec<Turn>,
    pub status: Status,
    pub round_count: u32,
    /// Milliseconds since the Unix epoch, UTC.
    pub created_at: i64,
    pub awaiting: Awaiting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_prediction: Option<Prediction>,
    /// Taboo: the model has said the secret word at some point.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub model_uttered_secret: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    /// Extra accepted spellings of the secret for metric matching.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub secret_aliases: Vec<String>,
}

/// Issues sessions and guarantees their ids are unique.
#[derive(Debug, Default, Clone)]
pub struct SessionFactory {
    issued: BTreeSet<SessionId>,
}

impl SessionFactory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Marks ids already in use (for example those loaded from a store).
    pub fn reserve<I: IntoIterator<Item = SessionId>>(&mut self, ids: I) {
        self.issued.extend(ids);
    }

    pub fn contains(&self, id: &SessionId) -> bool {
        self.issued.contains(id)
    }

    pub fn create(
        &mut self,
        id: SessionId,
        config: GameConfig,
        pairing: &Pairing,
        source: SecretSource,
        params: InferenceParams,
        created_at: i64,
    ) -> Result<Session, GameError> {
        if self.issued.contains(&id) {
            return Err(GameError::DuplicateSessionId(id.0));
        }
        let session = Session::new(id.clone(), config, pairing, source, params, created_at)?;
        self.issued.insert(id);
        Ok(session)
    }
}

impl Session {
    /// Builds a fresh active session. Prefer [`SessionFactory::create`],
    /// which also enforces id uniqueness.
    pub fn new(
        session_id: SessionId,
        config: GameConfig,
        pairing: &Pairing,
        source: SecretSource,
        inference_params: InferenceParams,
        created_at: i64,
    ) -> Result<Session, GameError> {
        config.validate()?;
        if pairing.game != config.game {
            return Err(GameError::PairingMismatch { pairing: pairing.game, config: config.game });
        }
        let secret = match (config.game, source) {
            (GameKind::Akinator, SecretSource::Withheld) => Secret::Object { object: None },
            (GameKind::Akinator, SecretSource::Provided(o)) if !o.trim().is_empty() => {
                Secret::Object { object: Some(o) }
            }
            (GameKind::Taboo, SecretSource::Draw { seed }) => {
                let words: Vec<&String> =
                    config.taboo_word_list.iter().filter(|w| !w.trim().is_empty()).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let word = words[rng.gen_range(0..words.len())].clone();
                Secret::Word { word }
            }
            (GameKind::Taboo, SecretSource::Provided(w)) if config.taboo_word_list.contains(&w) => {
                Secret::Word { word: w }
            }
            (GameKind::Bluffing, SecretSource::Withheld) => {
                Secret::Statement { text: None, truthful: None }
            }
            (GameKind::Bluffing, SecretSource::Provided(s)) if !s.trim().is_empty() => {
                Secret::Statement { text: Some(s), truthful: None }
            }
            (game, _) => return Err(GameError::InvalidSecret(game)),
        };
        Ok(Session {
            session_id,
            game: config.game,
            config,
            model_ref: pairing.model.id.clone(),
            prompt_ref: pairing.prompt.id.clone(),
            inference_params,
            secret,
            turns: Vec::new(),
            status: Status::Active,
            round_count: 0,
            created_at,
            awaiting: Awaiting::User,
            pending_prediction: None,
            model_uttered_secret: false,
            outcome: None,
            secret_aliases: Vec::new(),
        })
    }

    pub fn is_finished(&self) -> bool {
        self.status.is_terminal()
    }

    pub fn rounds_remaining(&self) -> u32 {
        self.config.max_rounds.saturating_sub(self.round_count)
    }

    /// Characters left for the next Taboo message.
    pub fn char_budget(&self) -> Option<u32> {
        self.config.user_char_limit
    }

    fn check_active(&self) -> Result<(), GameError> {
        if self.is_finished() {
            Err(GameError::SessionFinished)
        } else {
            Ok(())
        }
    }

    fn next_index(&self) -> u32 {
        self.round_count + 1
    }

    fn last_index(&self) -> u32 {
        self.turns.last().map_or(0, |t| t.index)
    }

    fn model_turns(&self) -> impl DoubleEndedIterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.role == Role::Model)
    }

    fn taboo_word(&self) -> &str {
        match &self.secret {
            Secret::Word { word } => word,
            _ => "",
        }
    }

    fn finish(&mut self, status: Status, outcome: Outcome) {
        debug_assert!(self.status.can_transition_to(status));
        self.status = status;
        self.awaiting = Awaiting::Nothing;
        self.pending_prediction = None;
        self.outcome = Some(outcome);
    }

    /// Marks an active session abandoned. Abandoned sessions carry no outcome.
    pub fn abandon(&mut self) -> Result<(), GameError> {
        self.check_active()?;
        self.status = Status::Abandoned;
        self.awaiting = Awaiting::Nothing;
        self.pending_prediction = None;
        Ok(())
    }

    /// Applies a message from the human player.
    pub fn apply_user_turn(&mut self, input: &str) -> Result<UserTurnEffect, GameError> {
        self.check_active()?;
        if input.trim().is_empty() {
            return Err(GameError::EmptyMessage);
        }
        match self.game {
            GameKind::Akinator => self.akinator_user_turn(input),
            GameKind::Taboo => self.taboo_user_turn(input),
            GameKind::Bluffing => self.bluffing_user_turn(input),
        }
    }

    fn akinator_user_turn(&mut self, input: &str) -> Result<UserTurnEffect, GameError> {
        if self.turns.is_empty() {
            // The opening message is free text.
            self.turns.push(Turn::new(1, Role::User, input.to_string()));
            self.awaiting = Awaiting::Model;
            return Ok(UserTurnEffect::Accepted);
        }
        let answer = AkinatorAnswer::parse(input).ok_or_else(|| GameError::InvalidAnswer {
            input: input.to_string(),
            accepted: accepted_answers(),
        })?;
        let effect = match self.awaiting {
            Awaiting::User => UserTurnEffect::Accepted,
            Awaiting::Feedback if self.pending_prediction.is_some() && self.rounds_remaining() > 0 => {
                if answer.is_affirmative() {
                    return Err(GameError::ConfirmViaFeedback);
                }
                self.pending_prediction = None;
                UserTurnEffect::GuessRejected
            }
            Awaiting::Feedback if self.pending_prediction.is_some() => {
                return Err(GameError::ConfirmViaFeedback)
            }
            Awaiting::Feedback => return Err(GameError::RevealRequired),
            _ => return Err(GameError::OutOfTurn(Role::User)),
        };
        self.turns.push(Turn::new(self.next_index(), Role::User, answer.as_str().to_string()));
        self.awaiting = Awaiting::Model;
        Ok(effect)
    }

    fn taboo_user_turn(&mut self, input: &str) -> Result<UserTurnEffect, GameError> {
        if self.awaiting != Awaiting::User {
            return Err(GameError::OutOfTurn(Role::User));
        }
        if let Some(limit) = self.config.user_char_limit {
            let len = input.chars().count();
            if len > limit as usize {
                return Err(GameError::CharLimitExceeded { len, limit });
            }
        }
        self.round_count += 1;
        let mut turn = Turn::new(self.round_count, Role::User, input.to_string());
        if detect_keyword_with(input, self.taboo_word(), self.config.keyword_match) {
            turn.rule_violation = true;
            self.turns.push(turn);
            let outcome = Outcome::new(Winner::Model, self.round_count);
            self.finish(Status::ModelWon, outcome);
            return Ok(UserTurnEffect::Forfeit);
        }
        self.turns.push(turn);
        self.awaiting = Awaiting::Model;
        Ok(UserTurnEffect::Accepted)
    }

    fn bluffing_user_turn(&mut self, input: &str) -> Result<UserTurnEffect, GameError> {
        if self.awaiting != Awaiting::User {
            return Err(GameError::OutOfTurn(Role::User));
        }
        if self.turns.is_empty() {
            if let Secret::Statement { text, .. } = &mut self.secret {
                match text {
                    Some(s) if s.trim() != input.trim() => return Err(GameError::StatementMismatch),
                    Some(_) => {}
                    None => *text = Some(input.to_string()),
                }
            }
        }
        self.turns.push(Turn::new(self.next_index(), Role::User, input.to_string()));
        self.awaiting = Awaiting::Model;
        Ok(UserTurnEffect::Accepted)
    }

    /// Applies a model output and classifies it as an ordinary move or a
    /// secret prediction.
    pub fn apply_model_turn(&mut self, output: &str) -> Result<TurnClassification, GameError> {
        self.check_active()?;
        if self.awaiting != Awaiting::Model {
            return Err(GameError::OutOfTurn(Role::Model));
        }
        if output.is_empty() {
            return Err(GameError::EmptyMessage);
        }
        let prediction =
            if output.trim().is_empty() { None } else { parse_guess(output, self.game) };
        let question_number = parse_question_number(output);
        let mut class = TurnClassification {
            kind: if prediction.is_some() { TurnKind::Prediction } else { TurnKind::Ordinary },
            prediction: prediction.clone(),
            question_number,
            numbering_ok: true,
            uttered_secret: false,
            ended: None,
        };
        match self.game {
            GameKind::Akinator => self.akinator_model_turn(output, &mut class),
            GameKind::Taboo => self.taboo_model_turn(output, &mut class),
            GameKind::Bluffing => self.bluffing_model_turn(output, &mut class),
        }
        Ok(class)
    }

    fn expected_question_number(&self) -> u32 {
        self.model_turns().filter_map(|t| t.question_number).max().map_or(1, |n| n + 1)
    }

    fn push_model_turn(&mut self, index: u32, output: &str, class: &TurnClassification) {
        let mut turn = Turn::new(index, Role::Model, output.to_string());
        turn.kind = class.kind;
        turn.prediction = class.prediction.clone();
        turn.question_number = class.question_number;
        turn.numbering_violation = !class.numbering_ok;
        turn.uttered_secret = class.uttered_secret;
        self.turns.push(turn);
    }

    fn akinator_model_turn(&mut self, output: &str, class: &mut TurnClassification) {
        if let Some(n) = class.question_number {
            class.numbering_ok = n == self.expected_question_number();
        }
        self.round_count += 1;
        self.push_model_turn(self.round_count, output, class);
        if let Some(p) = &class.prediction {
            self.pending_prediction = Some(p.clone());
            self.awaiting = Awaiting::Feedback;
        } else if self.rounds_remaining() == 0 {
            self.awaiting = Awaiting::Feedback;
        } else {
            self.awaiting = Awaiting::User;
        }
    }

    fn taboo_model_turn(&mut self, output: &str, class: &mut TurnClassification) {
        let word = self.taboo_word().to_string();
        let mode = self.config.keyword_match;
        class.uttered_secret = detect_keyword_with(output, &word, mode);
        self.model_uttered_secret |= class.uttered_secret;
        self.push_model_turn(self.round_count, output, class);
        let rounds = self.round_count;
        let terminal = match &class.prediction {
            Some(Prediction::Taboo(guess)) => {
                if taboo_guess_matches(guess, &word) {
                    Some(Winner::Model)
                } else {
                    Some(self.taboo_default_winner())
                }
            }
            _ if self.rounds_remaining() == 0 => Some(self.taboo_default_winner()),
            _ => None,
        };
        match terminal {
            Some(winner) => {
                let status =
                    if winner == Winner::Model { Status::ModelWon } else { Status::UserWon };
                self.finish(status, Outcome::new(winner, rounds));
                class.ended = Some(status);
            }
            None => self.awaiting = Awaiting::User,
        }
    }

    /// Taboo without a correct guess: the user wins iff the model said the word.
    fn taboo_default_winner(&self) -> Winner {
        if self.model_uttered_secret {
            Winner::User
        } else {
            Winner::Model
        }
    }

    fn bluffing_model_turn(&mut self, output: &str, class: &mut TurnClassification) {
        let index = self.next_index();
        if class.prediction.is_some() {
            // The verdict does not consume question budget.
            class.question_number = None;
            self.push_model_turn(index, output, class);
            self.pending_prediction = class.prediction.clone();
            self.awaiting = Awaiting::Feedback;
            return;
        }
        if self.rounds_remaining() == 0 {
            // Budget spent and still no verdict.
            self.push_model_turn(index, output, class);
            self.awaiting = Awaiting::Feedback;
            return;
        }
        if let Some(n) = class.question_number {
            class.numbering_ok = n == self.round_count + 1;
        }
        self.round_count += 1;
        self.push_model_turn(self.round_count, output, class);
        self.awaiting = Awaiting::User;
    }

    /// True when a prediction awaits the player's confirmation.
    pub fn has_pending_prediction(&self) -> bool {
        self.pending_prediction.is_some()
    }

    /// Records the player's feedback and closes the session.
    ///
    /// Taboo sessions end on their own; finalizing one returns the recorded
    /// outcome.
    pub fn finalize(
        &mut self,
        feedback: Feedback,
        revealed_secret: Option<&str>,
    ) -> Result<Outcome, GameError> {
        if self.game == GameKind::Taboo {
            return match (&self.outcome, self.status) {
                (Some(o), Status::ModelWon | Status::UserWon) => Ok(o.clone()),
                (_, Status::Abandoned) => Err(GameError::SessionFinished),
                _ => Err(GameError::NoPendingPrediction),
            };
        }
        self.check_active()?;
        if self.awaiting != Awaiting::Feedback {
            return Err(GameError::NoPendingPrediction);
        }
        let rounds = self.last_index();
        let reveal = revealed_secret.map(str::trim).filter(|s| !s.is_empty());
        match (self.game, self.pending_prediction.clone(), feedback) {
            (GameKind::Akinator, Some(Prediction::Akinator(obj)), Feedback::ConfirmedCorrect) => {
                self.secret = Secret::Object { object: Some(obj) };
                let mut outcome = Outcome::new(Winner::Model, rounds);
                outcome.user_feedback = Some(feedback);
                self.finish(Status::ModelWon, outcome.clone());
                Ok(outcome)
            }
            (GameKind::Akinator, None, Feedback::ConfirmedCorrect) => {
                Err(GameError::NoPendingPrediction)
            }
            (GameKind::Akinator, pending, Feedback::ConfirmedIncorrect) => {
                if pending.is_some() && self.rounds_remaining() > 0 {
                    return Err(GameError::GameContinues);
                }
                let reveal = reveal.ok_or(GameError::RevealRequired)?;
                self.secret = Secret::Object { object: Some(reveal.to_string()) };
                let mut outcome = Outcome::new(Winner::User, rounds);
                outcome.revealed_secret = Some(reveal.to_string());
                outcome.user_feedback = Some(feedback);
                self.finish(Status::UserWon, outcome.clone());
                Ok(outcome)
            }
            (GameKind::Bluffing, Some(Prediction::Bluffing(verdict)), fb) => {
                let correct = fb == Feedback::ConfirmedCorrect;
                self.set_truthful(verdict == correct);
                let winner = if correct { Winner::Model } else { Winner::User };
                let mut outcome = Outcome::new(winner, rounds);
                outcome.user_feedback = Some(fb);
                let status = if correct { Status::ModelWon } else { Status::UserWon };
                self.finish(status, outcome.clone());
                Ok(outcome)
            }
            (GameKind::Bluffing, None, Feedback::ConfirmedCorrect) => {
                Err(GameError::NoPendingPrediction)
            }
            (GameKind::Bluffing, _, Feedback::ConfirmedIncorrect) => {
                // No verdict was issued; the player may still reveal the truth.
                if let Some(truth) = reveal.and_then(parse_truth) {
                    self.set_truthful(truth);
                }
                let mut outcome = Outcome::new(Winner::User, rounds);
                outcome.revealed_secret = reveal.map(str::to_string);
                outcome.user_feedback = Some(Feedback::ConfirmedIncorrect);
                self.finish(Status::UserWon, outcome.clone());
                Ok(outcome)
            }
            _ => Err(GameError::NoPendingPrediction),
        }
    }

    fn set_truthful(&mut self, value: bool) {
        if let Secret::Statement { truthful, .. } = &mut self.secret {
            *truthful = Some(value);
        }
    }

    /// The model's last in-game Bluffing verdict, if any.
    pub fn final_verdict(&self) -> Option<bool> {
        self.model_turns().rev().find_map(|t| match t.prediction {
            Some(Prediction::Bluffing(v)) => Some(v),
            _ => None,
        })
    }
}

fn taboo_guess_matches(guess: &str, word: &str) -> bool {
    normalize_item(guess) == normalize_item(word)
}

fn parse_truth(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" => Some(true),
        "false" | "no" => Some(false),
        _ => None,
    }
}
