//! Domain model and rule-enforcing state machines for the three games.

mod parse;
mod session;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::KeywordMatch;

pub use parse::{format_guess, parse_guess, parse_question_number, AkinatorAnswer};
pub use session::{
    Awaiting, Feedback, Outcome, SecretSource, Session, SessionFactory, SessionId, Status,
    TurnClassification, UserTurnEffect, Winner,
};

/// Opening user message that starts every Akinator session.
pub const AKINATOR_OPENING: &str =
    "I have a secret object in my mind. Now you can start asking me questions and guess it.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Akinator,
    Taboo,
    Bluffing,
}

impl GameKind {
    pub const ALL: [GameKind; 3] = [GameKind::Akinator, GameKind::Taboo, GameKind::Bluffing];

    pub fn as_str(self) -> &'static str {
        match self {
            GameKind::Akinator => "akinator",
            GameKind::Taboo => "taboo",
            GameKind::Bluffing => "bluffing",
        }
    }

    /// True for the games whose retrospective output is a ranked list.
    pub fn uses_ranked_lists(self) -> bool {
        matches!(self, GameKind::Akinator | GameKind::Taboo)
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for GameKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "akinator" => Ok(GameKind::Akinator),
            "taboo" => Ok(GameKind::Taboo),
            "bluffing" => Ok(GameKind::Bluffing),
            other => Err(GameError::InvalidConfig(alloc::format!("unknown game `{other}`"))),
        }
    }
}

/// Labels of the five-level truthfulness scale, most truthful first.
pub const JUDGMENT_LABELS: [&str; 5] = ["True", "Possibly true", "Unknown", "Possibly false", "False"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub game: GameKind,
    /// Round limit. For Bluffing this is the question budget.
    pub max_rounds: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_char_limit: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taboo_word_list: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub judgment_levels: Vec<String>,
    #[serde(default)]
    pub keyword_match: KeywordMatch,
}

impl GameConfig {
    pub fn akinator() -> Self {
        GameConfig {
            game: GameKind::Akinator,
            max_rounds: 20,
            user_char_limit: None,
            taboo_word_list: Vec::new(),
            judgment_levels: Vec::new(),
            keyword_match: KeywordMatch::default(),
        }
    }

    pub fn taboo<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GameConfig {
            game: GameKind::Taboo,
            max_rounds: 5,
            user_char_limit: Some(140),
            taboo_word_list: words.into_iter().map(Into::into).collect(),
            judgment_levels: Vec::new(),
            keyword_match: KeywordMatch::default(),
        }
    }

    pub fn bluffing() -> Self {
        GameConfig {
            game: GameKind::Bluffing,
            max_rounds: 5,
            user_char_limit: None,
            taboo_word_list: Vec::new(),
            judgment_levels: JUDGMENT_LABELS.iter().map(|s| s.to_string()).collect(),
            keyword_match: KeywordMatch::default(),
        }
    }

    /// Default configuration for `game`; Taboo gets an empty word list.
    pub fn default_for(game: GameKind) -> Self {
        match game {
            GameKind::Akinator => Self::akinator(),
            GameKind::Taboo => Self::taboo(Vec::<String>::new()),
            GameKind::Bluffing => Self::bluffing(),
        }
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.max_rounds == 0 {
            return Err(GameError::InvalidConfig("max_rounds must be positive".into()));
        }
        match self.game {
            GameKind::Taboo => {
                match self.user_char_limit {
                    Some(0) => {
                        return Err(GameError::InvalidConfig(
                            "user_char_limit must be positive".into(),
                        ))
                    }
                    Some(_) => {}
                    None => {
                        return Err(GameError::InvalidConfig(
                            "taboo requires a user_char_limit".into(),
                        ))
                    }
                }
                if self.taboo_word_list.iter().all(|w| w.trim().is_empty()) {
                    return Err(GameError::EmptyWordList);
                }
            }
            GameKind::Akinator | GameKind::Bluffing => {
                if self.user_char_limit.is_some() {
                    return Err(GameError::InvalidConfig(
                        "user_char_limit applies to taboo only".into(),
                    ));
                }
                if !self.taboo_word_list.is_empty() {
                    return Err(GameError::InvalidConfig(
                        "taboo_word_list applies to taboo only".into(),
                    ));
                }
            }
        }
        match self.game {
            GameKind::Bluffing if self.judgment_levels.len() != 5 => Err(
                GameError::InvalidConfig("bluffing needs exactly five judgment levels".into()),
            ),
            GameKind::Akinator | GameKind::Taboo if !self.judgment_levels.is_empty() => Err(
                GameError::InvalidConfig("judgment_levels applies to bluffing only".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Model,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnKind {
    Ordinary,
    Prediction,
}

/// A game-secret prediction made by the model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "game", content = "payload", rename_all = "lowercase")]
pub enum Prediction {
    Akinator(String),
    Taboo(String),
    /// `true` means the model believes the statement is true.
    Bluffing(bool),
}

impl Prediction {
    pub fn game(&self) -> GameKind {
        match self {
            Prediction::Akinator(_) => GameKind::Akinator,
            Prediction::Taboo(_) => GameKind::Taboo,
            Prediction::Bluffing(_) => GameKind::Bluffing,
        }
    }

    pub fn text(&self) -> String {
        match self {
            Prediction::Akinator(s) | Prediction::Taboo(s) => s.clone(),
            Prediction::Bluffing(true) => "True".into(),
            Prediction::Bluffing(false) => "False".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    /// 1-based round this message belongs to.
    pub index: u32,
    pub role: Role,
    pub content: String,
    pub kind: TurnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<Prediction>,
    /// Parsed `Question N:` header, when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_number: Option<u32>,
    /// Header present but out of sequence.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub numbering_violation: bool,
    /// Taboo: the user's message contained the secret word.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub rule_violation: bool,
    /// Taboo: the model's message contained the secret word.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub uttered_secret: bool,
}

impl Turn {
    pub(crate) fn new(index: u32, role: Role, content: String) -> Self {
        Turn {
            index,
            role,
            content,
            kind: TurnKind::Ordinary,
            prediction: None,
            question_number: None,
            numbering_violation: false,
            rule_violation: false,
            uttered_secret: false,
        }
    }
}

/// The hidden target of a session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Secret {
    /// Held privately by the player until a win is confirmed or a loss is revealed.
    Object {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        object: Option<String>,
    },
    Word { word: String },
    Statement {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        text: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truthful: Option<bool>,
    },
}

impl Secret {
    /// Text form of the secret for metric matching (object or word).
    pub fn target_text(&self) -> Option<&str> {
        match self {
            Secret::Object { object } => object.as_deref(),
            Secret::Word { word } => Some(word),
            Secret::Statement { .. } => None,
        }
    }

    pub fn truthful(&self) -> Option<bool> {
        match self {
            Secret::Statement { truthful, .. } => *truthful,
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("invalid game config: {0}")]
    InvalidConfig(String),
    #[error("taboo word list is empty")]
    EmptyWordList,
    #[error("duplicate session id `{0}`")]
    DuplicateSessionId(String),
    #[error("pairing game {pairing} does not match config game {config}")]
    PairingMismatch { pairing: GameKind, config: GameKind },
    #[error("secret source does not fit {0}")]
    InvalidSecret(GameKind),
    #[error("session is finished")]
    SessionFinished,
    #[error("it is not the {0:?} turn")]
    OutOfTurn(Role),
    #[error("empty message")]
    EmptyMessage,
    #[error("message is {len} characters, the limit is {limit}")]
    CharLimitExceeded { len: usize, limit: u32 },
    #[error("unrecognized answer `{input}`; accepted answers: {accepted}")]
    InvalidAnswer { input: String, accepted: String },
    #[error("a guess is pending; confirm it through outcome feedback")]
    ConfirmViaFeedback,
    #[error("statement differs from the one recorded at session creation")]
    StatementMismatch,
    #[error("no pending prediction and round limit not reached")]
    NoPendingPrediction,
    #[error("rounds remain; answer the guess to keep playing")]
    GameContinues,
    #[error("the target object must be revealed when the model loses")]
    RevealRequired,
}

impl GameError {
    /// Stable machine-readable code for API responses.
    pub fn code(&self) -> &'static str {
        match self {
            GameError::InvalidConfig(_) => "invalid_config",
            GameError::EmptyWordList => "empty_word_list",
            GameError::DuplicateSessionId(_) => "duplicate_session",
            GameError::PairingMismatch { .. } => "pairing_mismatch",
            GameError::InvalidSecret(_) => "invalid_secret",
            GameError::SessionFinished => "session_finished",
            GameError::OutOfTurn(_) => "out_of_turn",
            GameError::EmptyMessage => "empty_message",
            GameError::CharLimitExceeded { .. } => "char_limit_exceeded",
            GameError::InvalidAnswer { .. } => "invalid_answer",
            GameError::ConfirmViaFeedback => "confirm_via_feedback",
            GameError::StatementMismatch => "statement_mismatch",
            GameError::NoPendingPrediction => "no_pending_prediction",
            GameError::GameContinues => "game_continues",
            GameError::RevealRequired => "reveal_required",
        }
    }
}

pub(crate) fn accepted_answers() -> String {
    let v: Vec<&str> = AkinatorAnswer::ALL.iter().map(|a| a.as_str()).collect();
    v.join(", ")
}
