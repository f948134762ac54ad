//! Published rankings of five models from the GameArena study and external
//! leaderboards, used for regression tests and `rank --fixtures reference`.

use gamearena_core::ranking::{Ranking, RankingError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSource {
    pub name: String,
    pub key: String,
    /// Rank of each model in `FixtureSet::models` order; `None` where the
    /// source does not list the model.
    pub ranks: Vec<Option<u32>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSet {
    pub models: Vec<String>,
    pub sources: Vec<FixtureSource>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("unknown fixture set `{0}`")]
    UnknownSet(String),
    #[error("unknown ranking `{0}`")]
    UnknownRanking(String),
    #[error("ranking `{key}` has {got} ranks for {expected} models")]
    Shape { key: String, got: usize, expected: usize },
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

impl FixtureSet {
    pub fn reference() -> Self {
        serde_json::from_str(include_str!("../assets/reference.json")).expect("fixture file parses")
    }

    pub fn by_name(name: &str) -> Result<Self, FixtureError> {
        match name {
            "reference" => Ok(Self::reference()),
            other => Err(FixtureError::UnknownSet(other.to_string())),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.sources.iter().map(|s| s.key.as_str())
    }

    /// Ranking for `key`, best first, over the models the source ranks.
    pub fn ranking(&self, key: &str) -> Result<Ranking, FixtureError> {
        let src = self
            .sources
            .iter()
            .find(|s| s.key.eq_ignore_ascii_case(key))
            .ok_or_else(|| FixtureError::UnknownRanking(key.to_string()))?;
        if src.ranks.len() != self.models.len() {
            return Err(FixtureError::Shape {
                key: src.key.clone(),
                got: src.ranks.len(),
                expected: self.models.len(),
            });
        }
        let mut ranked: Vec<(u32, &String)> =
            src.ranks.iter().zip(&self.models).filter_map(|(r, m)| r.map(|r| (r, m))).collect();
        ranked.sort();
        let mut r = Ranking::new(&src.name, ranked.into_iter().map(|(_, m)| m.clone()))?;
        r.tie_break = "published order".into();
        Ok(r)
    }

    /// Every ranking with at least two models.
    pub fn all(&self) -> Vec<(String, Ranking)> {
        self.sources
            .iter()
            .filter_map(|s| self.ranking(&s.key).ok().map(|r| (s.key.clone(), r)))
            .collect()
    }
}
