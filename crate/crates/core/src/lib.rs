//! Core of the GameArena evaluation platform.
//!
//! Everything in this crate is pure computation over in-memory values: the
//! rule-enforcing state machines for the three games (Akinator, Taboo,
//! Bluffing), seeded model/prompt pairing, parsing of retrospective replay
//! outputs, the outcome and procedural metrics, and ranking agreement
//! statistics. IO, networking and file formats live in the `gamearena`
//! companion crate.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chat;
pub mod game;
pub mod metrics;
pub mod pairing;
pub mod prompts;
pub mod ranking;
pub mod retro;
pub mod text;

pub mod rational;

pub use game::{
    AkinatorAnswer, Feedback, GameConfig, GameError, GameKind, Outcome, Prediction, Role, Secret,
    SecretSource, Session, SessionFactory, SessionId, Status, Turn, TurnKind, Winner,
};
pub use pairing::{ApiFlavor, InferenceParams, ModelRef, Pairing, PromptRef};
pub use rational::Rational;
pub use retro::{JudgmentLevel, RankedList, ReplayPoint, RetroTrace};
