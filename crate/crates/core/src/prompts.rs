//! Built-in prompt assets: five system prompts per game and the
//! retrospective replay prompt for each game.

use alloc::format;
use alloc::vec::Vec;

use crate::game::GameKind;
use crate::pairing::PromptRef;

const AKINATOR: [&str; 5] = [
    include_str!("../assets/prompts/akinator/1.txt"),
    include_str!("../assets/prompts/akinator/2.txt"),
    include_str!("../assets/prompts/akinator/3.txt"),
    include_str!("../assets/prompts/akinator/4.txt"),
    include_str!("../assets/prompts/akinator/5.txt"),
];

const TABOO: [&str; 5] = [
    include_str!("../assets/prompts/taboo/1.txt"),
    include_str!("../assets/prompts/taboo/2.txt"),
    include_str!("../assets/prompts/taboo/3.txt"),
    include_str!("../assets/prompts/taboo/4.txt"),
    include_str!("../assets/prompts/taboo/5.txt"),
];

const BLUFFING: [&str; 5] = [
    include_str!("../assets/prompts/bluffing/1.txt"),
    include_str!("../assets/prompts/bluffing/2.txt"),
    include_str!("../assets/prompts/bluffing/3.txt"),
    include_str!("../assets/prompts/bluffing/4.txt"),
    include_str!("../assets/prompts/bluffing/5.txt"),
];

const RETRO_AKINATOR: &str = include_str!("../assets/retro/akinator.txt");
const RETRO_TABOO: &str = include_str!("../assets/retro/taboo.txt");
const RETRO_BLUFFING: &str = include_str!("../assets/retro/bluffing.txt");

pub fn system_prompts(game: GameKind) -> &'static [&'static str; 5] {
    match game {
        GameKind::Akinator => &AKINATOR,
        GameKind::Taboo => &TABOO,
        GameKind::Bluffing => &BLUFFING,
    }
}

/// The default pool: ids `<game>-p1` .. `<game>-p5`.
pub fn default_prompt_pool() -> Vec<PromptRef> {
    GameKind::ALL
        .iter()
        .flat_map(|&game| {
            system_prompts(game).iter().enumerate().map(move |(i, body)| PromptRef {
                id: format!("{game}-p{}", i + 1),
                game,
                body: (*body).into(),
            })
        })
        .collect()
}

/// The retrospective replay prompt for `game`.
pub fn retro_prompt(game: GameKind) -> &'static str {
    match game {
        GameKind::Akinator => RETRO_AKINATOR,
        GameKind::Taboo => RETRO_TABOO,
        GameKind::Bluffing => RETRO_BLUFFING,
    }
}
