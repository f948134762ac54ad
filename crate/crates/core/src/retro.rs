//! Retrospective replay: which history prefixes get replayed, what the
//! replayed model is asked, and how its structured answers are parsed.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::chat::{transcript_messages, ChatMessage, ChatRole};
use crate::game::{GameKind, Role, Session, SessionId, Status, JUDGMENT_LABELS};
use crate::prompts::retro_prompt;
use crate::text::{find_ci, trim_item};

/// Longest candidate list kept after parsing.
pub const MAX_LIST_LEN: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RetroError {
    #[error("session {0} is not finished")]
    Unfinished(SessionId),
    #[error("ranked lists are not produced for {0}")]
    NotAListGame(GameKind),
}

/// One replay request: the exact history up to a round, plus the prompt
/// asking for the model's intermediate candidates or judgment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayPoint {
    pub session_id: SessionId,
    /// Akinator: the question just answered. Taboo: the round of the user
    /// message just sent. Bluffing: the number of answered questions, 0 for
    /// the point right after the opening statement.
    pub round: u32,
    pub system_prompt: String,
    pub history: Vec<ChatMessage>,
    pub retro_prompt: String,
}

impl ReplayPoint {
    /// True for the Bluffing point taken before any question was answered.
    pub fn is_opening(&self) -> bool {
        self.round == 0
    }

    /// Full message list sent to the model. The retro prompt follows the
    /// history as a user message; when the history already ends with a user
    /// message the prompt is appended to it after a blank line so roles keep
    /// alternating.
    pub fn request_messages(&self) -> Vec<ChatMessage> {
        let mut msgs = Vec::with_capacity(self.history.len() + 2);
        msgs.push(ChatMessage::system(self.system_prompt.clone()));
        msgs.extend(self.history.iter().cloned());
        match msgs.last_mut() {
            Some(last) if last.role == ChatRole::User => {
                last.content = format!("{}\n\n{}", last.content, self.retro_prompt);
            }
            _ => msgs.push(ChatMessage::user(self.retro_prompt.clone())),
        }
        msgs
    }
}

/// The retrospective prompt for a game.
pub fn build_retro_prompt(game: GameKind) -> &'static str {
    retro_prompt(game)
}

/// Replay points of a finished session, in round order. Each point ends
/// with a user message; a round whose model turn is the winning guess is
/// not replayed.
pub fn replay_points(session: &Session, system_prompt: &str) -> Result<Vec<ReplayPoint>, RetroError> {
    if !matches!(session.status, Status::ModelWon | Status::UserWon) {
        return Err(RetroError::Unfinished(session.session_id.clone()));
    }
    let messages = transcript_messages(session);
    let point = |round: u32, upto: usize| ReplayPoint {
        session_id: session.session_id.clone(),
        round,
        system_prompt: system_prompt.to_string(),
        history: messages[..upto].to_vec(),
        retro_prompt: retro_prompt(session.game).to_string(),
    };
    let winning_round = (session.status == Status::ModelWon)
        .then(|| session.turns.last())
        .flatten()
        .filter(|t| t.role == Role::Model && t.prediction.is_some())
        .map(|t| t.index);
    let mut points = Vec::new();
    let mut user_turns = 0u32;
    for (pos, turn) in session.turns.iter().enumerate() {
        if turn.role != Role::User {
            continue;
        }
        user_turns += 1;
        let round = match session.game {
            // The opening message carries no information about the object.
            GameKind::Akinator if user_turns == 1 => continue,
            GameKind::Akinator => turn.index - 1,
            GameKind::Taboo if winning_round == Some(turn.index) => continue,
            GameKind::Taboo => turn.index,
            GameKind::Bluffing => user_turns - 1,
        };
        points.push(point(round, pos + 1));
    }
    Ok(points)
}

/// A ranked list of candidate secrets, most likely first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub items: Vec<String>,
    #[serde(default)]
    pub rationale: String,
    /// Items were harvested from a plain numbered, bulleted or comma list.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub low_confidence: bool,
    /// More than the maximum number of items were offered.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub truncated: bool,
}

impl RankedList {
    /// Nothing usable was parsed; excluded from metrics.
    pub fn is_flagged(&self) -> bool {
        self.items.is_empty()
    }
}

fn item_anchor(game: GameKind) -> Result<&'static str, RetroError> {
    match game {
        GameKind::Akinator => Ok("object:"),
        GameKind::Taboo => Ok("word:"),
        GameKind::Bluffing => Err(RetroError::NotAListGame(game)),
    }
}

/// Parses `** Object: X **` / `** Word: X **` items and the
/// `** Additional Information: ... **` rationale.
pub fn parse_ranked_list(text: &str, game: GameKind) -> Result<RankedList, RetroError> {
    let anchor = item_anchor(game)?;
    let mut raw_items = Vec::new();
    let mut from = 0;
    while let Some(at) = find_ci(text, anchor, from) {
        from = at + anchor.len();
        let before = text[..at].trim_end_matches([' ', '\t']);
        if !before.ends_with("**") {
            continue;
        }
        let rest = &text[from..];
        let end = rest.find("**").or_else(|| rest.find('\n')).unwrap_or(rest.len());
        let item = trim_item(&rest[..end]);
        if !item.is_empty() {
            raw_items.push(item.to_string());
        }
        from += end;
    }
    let mut low_confidence = false;
    if raw_items.is_empty() {
        let body = match find_ci(text, "additional information", 0) {
            Some(at) => &text[..text[..at].rfind('\n').map_or(0, |nl| nl + 1)],
            None => text,
        };
        raw_items = harvest_plain_list(body);
        if raw_items.is_empty() {
            raw_items = split_comma_list(body);
        }
        low_confidence = !raw_items.is_empty();
    }
    let mut items: Vec<String> = Vec::new();
    for item in raw_items {
        let key = item.to_lowercase();
        if !items.iter().any(|seen| seen.to_lowercase() == key) {
            items.push(item);
        }
    }
    let truncated = items.len() > MAX_LIST_LEN;
    items.truncate(MAX_LIST_LEN);
    Ok(RankedList { items, rationale: parse_rationale(text), low_confidence, truncated })
}

fn parse_rationale(text: &str) -> String {
    const ANCHOR: &str = "additional information:";
    let Some(at) = find_ci(text, ANCHOR, 0) else {
        return String::new();
    };
    let rest = text[at + ANCHOR.len()..].trim_start_matches([' ', '\t']);
    if let Some(after) = rest.strip_prefix("**") {
        return after.trim().to_string();
    }
    let end = rest.find("**").unwrap_or(rest.len());
    rest[..end].trim().to_string()
}

/// Splits a bare `a, b (x, y), c` list on commas outside parentheses.
fn split_comma_list(text: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    let mut push = |current: &mut String| {
        let item = trim_item(current);
        if !item.is_empty() {
            items.push(item.to_string());
        }
        current.clear();
    };
    for c in text.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            ',' | '\n' if depth == 0 => {
                push(&mut current);
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    push(&mut current);
    if items.len() < 2 {
        items.clear();
    }
    items
}

fn harvest_plain_list(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|line| {
            let l = line.trim();
            let body = if let Some(b) = l.strip_prefix(['-', '*', '\u{2022}']) {
                b
            } else {
                let digits = l.chars().take_while(char::is_ascii_digit).count();
                if digits == 0 {
                    return None;
                }
                l[digits..].strip_prefix(['.', ')'])?
            };
            let item = trim_item(body);
            (!item.is_empty()).then(|| item.to_string())
        })
        .collect()
}

/// Five-level truthfulness judgment, 1 = True ... 5 = False.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct JudgmentLevel(u8);

impl JudgmentLevel {
    pub const TRUE: JudgmentLevel = JudgmentLevel(1);
    pub const UNKNOWN: JudgmentLevel = JudgmentLevel(3);
    pub const FALSE: JudgmentLevel = JudgmentLevel(5);

    pub fn new(level: u8) -> Option<Self> {
        (1..=5).contains(&level).then_some(JudgmentLevel(level))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn label(self) -> &'static str {
        JUDGMENT_LABELS[usize::from(self.0 - 1)]
    }

    /// Level of a ground-truth verdict: True maps to 1, False to 5.
    pub fn from_truth(truthful: bool) -> Self {
        if truthful {
            Self::TRUE
        } else {
            Self::FALSE
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        let l = trim_item(label).to_lowercase();
        let words: Vec<&str> = l.split_whitespace().collect();
        let l = words.join(" ");
        // Longer labels first so "possibly true" is not read as "true".
        let found = match l.as_str() {
            s if s.starts_with("possibly true") => 2,
            s if s.starts_with("possibly false") => 4,
            s if s.starts_with("unknown") || s.starts_with("unkown") => 3,
            s if s.starts_with("true") => 1,
            s if s.starts_with("false") => 5,
            _ => return None,
        };
        Some(JudgmentLevel(found))
    }
}

impl TryFrom<u8> for JudgmentLevel {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        JudgmentLevel::new(v).ok_or_else(|| format!("judgment level {v} outside 1..=5"))
    }
}

impl From<JudgmentLevel> for u8 {
    fn from(j: JudgmentLevel) -> u8 {
        j.0
    }
}

impl fmt::Display for JudgmentLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Result of [`parse_judgment`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedJudgment {
    pub level: JudgmentLevel,
    /// Nothing recognizable was found and `level` is the neutral default.
    pub flagged: bool,
}

/// Renders a level in the replay output format.
pub fn format_judgment(level: JudgmentLevel) -> String {
    format!("** I believe your statement is: {} **", level.label())
}

/// Maps a Bluffing replay answer to a judgment level. Unparseable text maps
/// to Unknown (3) and is flagged.
pub fn parse_judgment(text: &str) -> ParsedJudgment {
    const ANCHOR: &str = "i believe your statement is";
    if let Some(at) = find_ci(text, ANCHOR, 0) {
        let rest = text[at + ANCHOR.len()..]
            .trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | '*' | '"' | '\''));
        let end = rest.find("**").or_else(|| rest.find('\n')).unwrap_or(rest.len());
        if let Some(level) = JudgmentLevel::from_label(&rest[..end]) {
            return ParsedJudgment { level, flagged: false };
        }
    } else if let Some(level) = JudgmentLevel::from_label(text) {
        if trim_item(text).split_whitespace().count() <= 2 {
            return ParsedJudgment { level, flagged: false };
        }
    }
    ParsedJudgment { level: JudgmentLevel::UNKNOWN, flagged: true }
}

/// Parsed content of one replay answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RetroOutput {
    List(RankedList),
    Judgment(ParsedJudgment),
    /// The completion call failed; the point can be resumed later.
    Failed { error: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetroEntry {
    pub round: u32,
    /// Raw model text, kept for audit. Empty for failed calls.
    pub raw: String,
    pub output: RetroOutput,
}

impl RetroEntry {
    pub fn parse(game: GameKind, round: u32, raw: String) -> Self {
        let output = match game {
            GameKind::Bluffing => RetroOutput::Judgment(parse_judgment(&raw)),
            g => RetroOutput::List(parse_ranked_list(&raw, g).unwrap_or_default()),
        };
        RetroEntry { round, raw, output }
    }

    pub fn failed(round: u32, error: impl Into<String>) -> Self {
        RetroEntry { round, raw: String::new(), output: RetroOutput::Failed { error: error.into() } }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self.output, RetroOutput::Failed { .. })
    }

    /// Parsed but unusable for metrics.
    pub fn is_flagged(&self) -> bool {
        match &self.output {
            RetroOutput::List(l) => l.is_flagged(),
            RetroOutput::Judgment(j) => j.flagged,
            RetroOutput::Failed { .. } => false,
        }
    }
}

/// All replay answers for one session.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetroTrace {
    pub session_id: SessionId,
    pub game: GameKind,
    pub model_ref: String,
    pub entries: Vec<RetroEntry>,
}

impl RetroTrace {
    pub fn new(session: &Session) -> Self {
        RetroTrace {
            session_id: session.session_id.clone(),
            game: session.game,
            model_ref: session.model_ref.clone(),
            entries: Vec::new(),
        }
    }

    /// Usable ranked lists with their rounds, in round order.
    pub fn lists(&self) -> impl Iterator<Item = (u32, &RankedList)> {
        self.entries.iter().filter_map(|e| match &e.output {
            RetroOutput::List(l) if !l.is_flagged() => Some((e.round, l)),
            _ => None,
        })
    }

    /// Usable judgments after each answered question (the opening point is
    /// the neutral starting position and is left out), in round order.
    pub fn judgments(&self) -> Vec<JudgmentLevel> {
        self.entries
            .iter()
            .filter(|e| e.round > 0)
            .filter_map(|e| match &e.output {
                RetroOutput::Judgment(j) if !j.flagged => Some(j.level),
                _ => None,
            })
            .collect()
    }

    pub fn has_failures(&self) -> bool {
        self.entries.iter().any(RetroEntry::is_failed)
    }

    /// Counts of (flagged, failed) entries for data-quality reporting.
    pub fn quality(&self) -> (usize, usize) {
        let flagged = self.entries.iter().filter(|e| e.is_flagged()).count();
        let failed = self.entries.iter().filter(|e| e.is_failed()).count();
        (flagged, failed)
    }
}
