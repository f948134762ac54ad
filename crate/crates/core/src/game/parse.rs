use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{GameKind, Prediction};
use crate::text::{find_ci, trim_item};

/// A player's answer to an Akinator question.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AkinatorAnswer {
    Yes,
    No,
    ProbablyYes,
    ProbablyNo,
    DontKnow,
}

impl AkinatorAnswer {
    pub const ALL: [AkinatorAnswer; 5] = [
        AkinatorAnswer::Yes,
        AkinatorAnswer::No,
        AkinatorAnswer::ProbablyYes,
        AkinatorAnswer::ProbablyNo,
        AkinatorAnswer::DontKnow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AkinatorAnswer::Yes => "Yes",
            AkinatorAnswer::No => "No",
            AkinatorAnswer::ProbablyYes => "Probably Yes",
            AkinatorAnswer::ProbablyNo => "Probably No",
            AkinatorAnswer::DontKnow => "Don't Know",
        }
    }

    /// Case-insensitive parse. "not sure" is an alias of "Don't Know".
    pub fn parse(input: &str) -> Option<Self> {
        let cleaned: String = input
            .trim()
            .trim_end_matches(['.', '!'])
            .chars()
            .filter(|c| !matches!(c, '\'' | '\u{2019}'))
            .flat_map(char::to_lowercase)
            .collect();
        let norm: Vec<&str> = cleaned.split_whitespace().collect();
        match norm.join(" ").as_str() {
            "yes" => Some(AkinatorAnswer::Yes),
            "no" => Some(AkinatorAnswer::No),
            "probably yes" => Some(AkinatorAnswer::ProbablyYes),
            "probably no" => Some(AkinatorAnswer::ProbablyNo),
            "dont know" | "do not know" | "not sure" => Some(AkinatorAnswer::DontKnow),
            _ => None,
        }
    }

    pub fn is_affirmative(self) -> bool {
        matches!(self, AkinatorAnswer::Yes | AkinatorAnswer::ProbablyYes)
    }
}

impl fmt::Display for AkinatorAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

const AKINATOR_ANCHOR: &str = "this is a guess";
const AKINATOR_LEAD: &str = "are you thinking of";
const TABOO_ANCHOR: &str = "my guess of the word is";
const BLUFFING_ANCHOR: &str = "i believe your statement is";

/// Renders a prediction in the game's guess template.
pub fn format_guess(prediction: &Prediction) -> String {
    match prediction {
        Prediction::Akinator(object) => {
            format!("This is a guess -- are you thinking of {object}?")
        }
        Prediction::Taboo(word) => format!("My guess of the word is: {word}"),
        Prediction::Bluffing(verdict) => {
            format!("I believe your statement is: {}", if *verdict { "True" } else { "False" })
        }
    }
}

/// Extracts a secret prediction from model output, if the game's guess
/// phrase is present anywhere in the text.
pub fn parse_guess(output: &str, game: GameKind) -> Option<Prediction> {
    match game {
        GameKind::Akinator => {
            let at = find_ci(output, AKINATOR_ANCHOR, 0)?;
            let mut rest = &output[at + AKINATOR_ANCHOR.len()..];
            rest = rest.trim_start_matches(|c: char| {
                c.is_whitespace() || matches!(c, '-' | ':' | ',' | '\u{2014}' | '\u{2013}')
            });
            if let Some(p) = find_ci(rest, AKINATOR_LEAD, 0) {
                if rest[..p].trim().is_empty() {
                    rest = &rest[p + AKINATOR_LEAD.len()..];
                }
            }
            let end = rest.find(['?', '\n']).unwrap_or(rest.len());
            let object = trim_item(&rest[..end]);
            (!object.is_empty()).then(|| Prediction::Akinator(object.to_string()))
        }
        GameKind::Taboo => {
            let at = find_ci(output, TABOO_ANCHOR, 0)?;
            let rest = output[at + TABOO_ANCHOR.len()..].trim_start_matches(|c: char| {
                c.is_whitespace() || matches!(c, ':' | '*' | '-')
            });
            let end = rest.find(['.', '!', '?', '\n', ',', ';', '*']).unwrap_or(rest.len());
            let word = trim_item(&rest[..end]);
            (!word.is_empty()).then(|| Prediction::Taboo(word.to_string()))
        }
        GameKind::Bluffing => {
            let at = find_ci(output, BLUFFING_ANCHOR, 0)?;
            let rest = output[at + BLUFFING_ANCHOR.len()..].trim_start_matches(|c: char| {
                c.is_whitespace() || matches!(c, ':' | '*' | '"' | '\'' | '`' | '-')
            });
            let head: String = rest.chars().take(5).flat_map(char::to_lowercase).collect();
            if head.starts_with("true") {
                Some(Prediction::Bluffing(true))
            } else if head.starts_with("false") {
                Some(Prediction::Bluffing(false))
            } else {
                None
            }
        }
    }
}

/// Parses a leading `Question N:` header (case-insensitive, optional `**`).
pub fn parse_question_number(output: &str) -> Option<u32> {
    let s = output.trim_start().trim_start_matches('*').trim_start();
    if !s.get(..8).is_some_and(|h| h.eq_ignore_ascii_case("question")) {
        return None;
    }
    let rest = s[8..].trim_start();
    let digits: String = rest.chars().take_while(char::is_ascii_digit).collect();
    if digits.is_empty() {
        return None;
    }
    let after = rest[digits.len()..].trim_start();
    if !after.starts_with(':') {
        return None;
    }
    digits.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answers_parse_case_insensitively() {
        assert_eq!(AkinatorAnswer::parse("probably no"), Some(AkinatorAnswer::ProbablyNo));
        assert_eq!(AkinatorAnswer::parse("  YES "), Some(AkinatorAnswer::Yes));
        assert_eq!(AkinatorAnswer::parse("Don't Know"), Some(AkinatorAnswer::DontKnow));
        assert_eq!(AkinatorAnswer::parse("not sure"), Some(AkinatorAnswer::DontKnow));
        assert_eq!(AkinatorAnswer::parse("Probably  Yes."), Some(AkinatorAnswer::ProbablyYes));
        assert_eq!(AkinatorAnswer::parse("maybe"), None);
        assert_eq!(AkinatorAnswer::parse(""), None);
        for a in AkinatorAnswer::ALL {
            assert_eq!(AkinatorAnswer::parse(a.as_str()), Some(a));
        }
    }

    #[test]
    fn akinator_guess_inside_question_header() {
        let out = "Question 15: This is a guess -- are you thinking of an electric guitar?";
        assert_eq!(
            parse_guess(out, GameKind::Akinator),
            Some(Prediction::Akinator("an electric guitar".into()))
        );
        assert_eq!(parse_guess("Let me ask another question.", GameKind::Akinator), None);
    }

    #[test]
    fn taboo_guess_stops_at_sentence_end() {
        let out = "My guess of the word is: SAMOA. Post-game analysis: ...";
        assert_eq!(parse_guess(out, GameKind::Taboo), Some(Prediction::Taboo("SAMOA".into())));
        let out = "I think I might have unconsciously revealed the secret word! my guess of the word is: \"samoa\"";
        assert_eq!(parse_guess(out, GameKind::Taboo), Some(Prediction::Taboo("samoa".into())));
    }

    #[test]
    fn bluffing_verdicts() {
        assert_eq!(
            parse_guess("I believe your statement is: True", GameKind::Bluffing),
            Some(Prediction::Bluffing(true))
        );
        assert_eq!(
            parse_guess("Thanks. I BELIEVE YOUR STATEMENT IS 'false'.", GameKind::Bluffing),
            Some(Prediction::Bluffing(false))
        );
        assert_eq!(parse_guess("I believe your statement is: Unknown", GameKind::Bluffing), None);
    }

    #[test]
    fn question_headers() {
        assert_eq!(parse_question_number("Question 3: Can you describe it?"), Some(3));
        assert_eq!(parse_question_number("**Question 12:** Is it red?"), Some(12));
        assert_eq!(parse_question_number("question 1 : Is it alive?"), Some(1));
        assert_eq!(parse_question_number("Is it alive?"), None);
        assert_eq!(parse_question_number("Question: what?"), None);
    }

    #[test]
    fn format_then_parse_is_identity() {
        for p in [
            Prediction::Akinator("a thimble".into()),
            Prediction::Taboo("eggs".into()),
            Prediction::Bluffing(true),
            Prediction::Bluffing(false),
        ] {
            assert_eq!(parse_guess(&format_guess(&p), p.game()), Some(p));
        }
    }
}
