//! Random action sequences against a session, checking the rule invariants
//! after every step. Shared by the property tests and the acceptance run.

#![allow(dead_code)]

use gamearena_core::game::{format_guess, parse_guess, AkinatorAnswer};
use gamearena_core::pairing::{InferenceParams, ModelRef, Pairing, PromptRef};
use gamearena_core::text::detect_keyword_with;
use gamearena_core::{Feedback, GameConfig, GameKind, Prediction, Role, Secret, SecretSource, Session, SessionId, Status};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS: [&str; 8] = ["Samoa", "violin", "eggs", "lighthouse", "Mercury", "glacier", "tango", "pepper"];
const OBJECTS: [&str; 5] = ["an electric guitar", "a thimble", "a bicycle", "a toaster", "a pine cone"];
const FILLER: [&str; 10] =
    ["island", "ocean", "warm", "music", "kitchen", "planet", "south", "dance", "string", "spicy"];

/// Tally of one or more sequences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub sequences: u64,
    pub steps: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub finished: u64,
    pub round_limit_violations: u64,
    pub taboo_leaks: u64,
    pub bad_transitions: u64,
    pub mutated_on_error: u64,
    pub roundtrip_failures: u64,
}

impl Tally {
    pub fn violations(&self) -> u64 {
        self.round_limit_violations
            + self.taboo_leaks
            + self.bad_transitions
            + self.mutated_on_error
            + self.roundtrip_failures
    }

    pub fn add(&mut self, o: &Tally) {
        self.sequences += o.sequences;
        self.steps += o.steps;
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.finished += o.finished;
        self.round_limit_violations += o.round_limit_violations;
        self.taboo_leaks += o.taboo_leaks;
        self.bad_transitions += o.bad_transitions;
        self.mutated_on_error += o.mutated_on_error;
        self.roundtrip_failures += o.roundtrip_failures;
    }
}

fn pairing(game: GameKind) -> Pairing {
    Pairing {
        game,
        model: ModelRef::mock("m", "inline"),
        prompt: PromptRef { id: format!("{game}-p1"), game, body: "rules".into() },
    }
}

pub fn new_session(game: GameKind, rng: &mut ChaCha8Rng) -> Session {
    let (config, source) = match game {
        GameKind::Akinator => (
            GameConfig::akinator(),
            if rng.gen_bool(0.5) {
                SecretSource::Withheld
            } else {
                SecretSource::Provided(OBJECTS.choose(rng).unwrap().to_string())
            },
        ),
        GameKind::Taboo => (GameConfig::taboo(WORDS), SecretSource::Draw { seed: rng.gen() }),
        GameKind::Bluffing => (GameConfig::bluffing(), SecretSource::Withheld),
    };
    Session::new(SessionId("prop".into()), config, &pairing(game), source, InferenceParams::default(), 0).unwrap()
}

fn secret_text(s: &Session) -> String {
    match &s.secret {
        Secret::Word { word } => word.clone(),
        Secret::Object { object } => object.clone().unwrap_or_else(|| OBJECTS[0].into()),
        Secret::Statement { text, .. } => text.clone().unwrap_or_else(|| "I can juggle".into()),
    }
}

fn phrase(rng: &mut ChaCha8Rng, words: std::ops::Range<usize>) -> String {
    let n = rng.gen_range(words);
    (0..n).map(|_| *FILLER.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn casing(rng: &mut ChaCha8Rng, w: &str) -> String {
    match rng.gen_range(0..3) {
        0 => w.to_uppercase(),
        1 => w.to_lowercase(),
        _ => w.to_string(),
    }
}

fn user_text(s: &Session, rng: &mut ChaCha8Rng) -> String {
    let secret = secret_text(s);
    match rng.gen_range(0..9) {
        0..=2 => AkinatorAnswer::ALL.choose(rng).unwrap().as_str().to_string(),
        3 => phrase(rng, 1..8),
        4 => format!("{} {}{} {}", phrase(rng, 2..3), casing(rng, &secret), ["", "s", "!", "'s"].choose(rng).unwrap(), phrase(rng, 1..2)),
        5 => "x".repeat(rng.gen_range(130..150)),
        6 => ["", "   ", "\n"].choose(rng).unwrap().to_string(),
        7 => secret,
        _ => format!("{}{}", phrase(rng, 1..2), casing(rng, &secret)),
    }
}

fn model_text(s: &Session, rng: &mut ChaCha8Rng) -> String {
    let secret = secret_text(s);
    let n = rng.gen_range(0..25);
    match rng.gen_range(0..9) {
        0 | 1 => format!("Question {n}: Is it {}?", phrase(rng, 2..3)),
        2 => format!("Question {n}: {}", format_guess(&Prediction::Akinator(OBJECTS.choose(rng).unwrap().to_string()))),
        3 => format_guess(&Prediction::Taboo(if rng.gen_bool(0.5) { secret.clone() } else { WORDS.choose(rng).unwrap().to_string() })),
        4 => format!("Is it {}? I keep thinking of {}.", phrase(rng, 1..2), casing(rng, &secret)),
        5 => format_guess(&Prediction::Bluffing(rng.gen())),
        6 => ["", " "].choose(rng).unwrap().to_string(),
        7 => format!("{} {}", phrase(rng, 3..4), format_guess(&Prediction::Taboo(phrase(rng, 1..2)))),
        _ => phrase(rng, 1..10),
    }
}

fn check_state(prev: &Session, s: &Session, t: &mut Tally) {
    if s.round_count > s.config.max_rounds {
        t.round_limit_violations += 1;
    }
    if prev.status != s.status && !prev.status.can_transition_to(s.status) {
        t.bad_transitions += 1;
    }
    if s.status.is_terminal() != (s.awaiting == gamearena_core::game::Awaiting::Nothing) {
        t.bad_transitions += 1;
    }
    if s.game == GameKind::Taboo {
        let word = secret_text(s);
        let n = s.turns.len();
        for (i, turn) in s.turns.iter().enumerate() {
            if turn.role != Role::User || !detect_keyword_with(&turn.content, &word, s.config.keyword_match) {
                continue;
            }
            // Only a forfeiting final message may contain the word.
            if !(turn.rule_violation && i + 1 == n && s.status == Status::ModelWon) {
                t.taboo_leaks += 1;
            }
        }
    }
}

fn check_roundtrip(rng: &mut ChaCha8Rng, t: &mut Tally) {
    let p = match rng.gen_range(0..3) {
        0 => {
            let article = ["a", "an", "the"].choose(rng).unwrap();
            Prediction::Akinator(format!("{article} {}", phrase(rng, 1..4)))
        }
        1 => {
            let w = phrase(rng, 1..3);
            Prediction::Taboo(casing(rng, &w))
        }
        _ => Prediction::Bluffing(rng.gen()),
    };
    let text = format_guess(&p);
    let wrapped = match rng.gen_range(0..3) {
        0 => text.clone(),
        1 => format!("Question 7: {text}"),
        _ => format!("{}. {text}", phrase(rng, 3..4)),
    };
    if parse_guess(&wrapped, p.game()) != Some(p) {
        t.roundtrip_failures += 1;
    }
}

/// Plays one random sequence of up to `steps` actions.
pub fn run_sequence(game: GameKind, seed: u64, steps: usize) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = new_session(game, &mut rng);
    let mut t = Tally { sequences: 1, ..Default::default() };
    for _ in 0..steps {
        let prev = s.clone();
        let roll = rng.gen_range(0..100);
        let res: Result<(), ()> = if roll < 45 {
            let text = user_text(&s, &mut rng);
            s.apply_user_turn(&text).map(|_| ()).map_err(|_| ())
        } else if roll < 90 {
            let text = model_text(&s, &mut rng);
            s.apply_model_turn(&text).map(|_| ()).map_err(|_| ())
        } else if roll < 98 {
            let fb = if rng.gen_bool(0.5) { Feedback::ConfirmedCorrect } else { Feedback::ConfirmedIncorrect };
            let reveal = ["", "a thimble", "True", "False"].choose(&mut rng).unwrap().to_string();
            let reveal = rng.gen_bool(0.6).then_some(reveal);
            s.finalize(fb, reveal.as_deref()).map(|_| ()).map_err(|_| ())
        } else {
            s.abandon().map_err(|_| ())
        };
        t.steps += 1;
        match res {
            Ok(()) => t.accepted += 1,
            Err(()) => {
                t.rejected += 1;
                if s != prev {
                    t.mutated_on_error += 1;
                }
            }
        }
        check_state(&prev, &s, &mut t);
        check_roundtrip(&mut rng, &mut t);
        if s.is_finished() && rng.gen_bool(0.7) {
            break;
        }
    }
    t.finished += u64::from(s.is_finished());
    t
}

/// Runs `n` sequences with seeds derived from `base`.
pub fn run_many(game: GameKind, base: u64, n: u64, steps: usize) -> Tally {
    let mut total = Tally::default();
    for i in 0..n {
        total.add(&run_sequence(game, base.wrapping_mul(1_000_003).wrapping_add(i), steps));
    }
    total
}
