//! Model rankings and agreement statistics between rankings: Kendall's tau
//! with a Z test, rank-biased overlap with a permutation test.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::GameKind;
use crate::metrics::{OutcomeReport, ProceduralReport};
use crate::rational::{ratio, to_f64, Rational};

/// Persistence used when none is given.
pub const DEFAULT_PERSISTENCE: f64 = 0.9;

/// Tolerance for "at least as large" in the permutation test, so that
/// permutations tying the observed value are counted despite rounding.
const TIE_EPS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RankingError {
    #[error("a ranking needs at least 2 models, got {0}")]
    TooShort(usize),
    #[error("model `{0}` appears twice")]
    DuplicateModel(String),
    #[error("rankings cover different model sets")]
    MismatchedModels,
    #[error("persistence must be in (0, 1)")]
    InvalidPersistence,
    #[error("exhaustive enumeration is limited to {max} models, got {got}")]
    TooLongForExhaustive { got: usize, max: usize },
    #[error("permutation test needs at least one iteration")]
    NoIterations,
    #[error("metric `{metric}` missing for model `{model}`")]
    Incomplete { model: String, metric: String },
}

pub const TIE_BREAK_POLICY: &str = "avg_rounds ascending, then model id";

/// Models in rank order, rank 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub source: String,
    pub models: Vec<String>,
    #[serde(default)]
    pub tie_break: String,
}

impl Ranking {
    pub fn new<S: Into<String>>(source: &str, models: impl IntoIterator<Item = S>) -> Result<Self, RankingError> {
        let r = Ranking {
            source: source.to_string(),
            models: models.into_iter().map(Into::into).collect(),
            tie_break: String::new(),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), RankingError> {
        if self.models.len() < 2 {
            return Err(RankingError::TooShort(self.models.len()));
        }
        let mut seen = BTreeSet::new();
        for m in &self.models {
            if !seen.insert(m.as_str()) {
                return Err(RankingError::DuplicateModel(m.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn position(&self, model: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }

    pub fn reversed(&self) -> Self {
        let mut r = self.clone();
        r.models.reverse();
        r
    }

    /// The ranking restricted to `keep`, relative order preserved.
    pub fn restrict_to(&self, keep: &[String]) -> Self {
        let mut r = self.clone();
        r.models.retain(|m| keep.contains(m));
        r
    }

    fn same_set(&self, other: &Ranking) -> Result<(), RankingError> {
        self.validate()?;
        other.validate()?;
        let a: BTreeSet<&str> = self.models.iter().map(String::as_str).collect();
        let b: BTreeSet<&str> = other.models.iter().map(String::as_str).collect();
        if a == b {
            Ok(())
        } else {
            Err(RankingError::MismatchedModels)
        }
    }
}

/// (C - D) / (n(n-1)/2) over all model pairs.
pub fn kendall_tau(r1: &Ranking, r2: &Ranking) -> Result<Rational, RankingError> {
    r1.same_set(r2)?;
    let pos2: Vec<usize> = r1.models.iter().map(|m| r2.position(m).unwrap_or(0)).collect();
    let n = pos2.len();
    let mut score = 0i128;
    for i in 0..n {
        for j in i + 1..n {
            score += if pos2[i] < pos2[j] { 1 } else { -1 };
        }
    }
    let n = n as i128;
    Ok(ratio(2 * score, n * (n - 1)))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RboVariant {
    /// Truncated sum plus p^n, the agreement beyond depth n of two rankings
    /// over the same items.
    #[default]
    Conjoint,
    /// Truncated sum only.
    Truncated,
}

/// Rank-biased overlap at persistence `p`.
pub fn rbo(r1: &Ranking, r2: &Ranking, p: f64, variant: RboVariant) -> Result<f64, RankingError> {
    r1.same_set(r2)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(RankingError::InvalidPersistence);
    }
    Ok(rbo_unchecked(&r1.models, &r2.models, p, variant))
}

fn rbo_unchecked<T: Ord>(a: &[T], b: &[T], p: f64, variant: RboVariant) -> f64 {
    let mut seen_a = BTreeSet::new();
    let mut seen_b = BTreeSet::new();
    let mut overlap = 0usize;
    let mut sum = 0.0;
    let mut weight = 1.0;
    for (d, (x, y)) in a.iter().zip(b).enumerate() {
        if x == y {
            overlap += 1;
        } else {
            overlap += usize::from(seen_b.contains(x)) + usize::from(seen_a.contains(y));
        }
        seen_a.insert(x);
        seen_b.insert(y);
        sum += overlap as f64 / (d + 1) as f64 * weight;
        weight *= p;
    }
    let head = (1.0 - p) * sum;
    match variant {
        RboVariant::Conjoint => head + weight,
        RboVariant::Truncated => head,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariance {
    /// 2 / (n(n-1)).
    #[default]
    Simple,
    /// 2(2n+5) / (9n(n-1)), the usual null variance.
    Null,
}

impl TauVariance {
    pub fn variance(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            TauVariance::Simple => 2.0 / (n * (n - 1.0)),
            TauVariance::Null => 2.0 * (2.0 * n + 5.0) / (9.0 * n * (n - 1.0)),
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// Z score of tau and its one-tailed p-value 1 - Φ(Z).
pub fn tau_z_test(tau: f64, n: usize, variance: TauVariance) -> Result<(f64, f64), RankingError> {
    if n < 2 {
        return Err(RankingError::TooShort(n));
    }
    let z = tau / libm::sqrt(variance.variance(n));
    Ok((z, 0.5 * libm::erfc(z / core::f64::consts::SQRT_2)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PermutationMode {
    /// Every permutation of the first ranking's models.
    Exhaustive,
    Sampled { iterations: u32, seed: u64 },
}

/// Largest n for which the exhaustive mode is accepted.
pub const EXHAUSTIVE_MAX: usize = 8;

/// Share of null rankings (permutations of `r1`) whose RBO against `r1`
/// reaches the observed RBO of `r1` and `r2`.
pub fn rbo_permutation_test(
    r1: &Ranking,
    r2: &Ranking,
    p: f64,
    variant: RboVariant,
    mode: PermutationMode,
) -> Result<f64, RankingError> {
    let observed = rbo(r1, r2, p, variant)?;
    let base: Vec<usize> = (0..r1.len()).collect();
    let reaches = |perm: &[usize]| rbo_unchecked(&base, perm, p, variant) >= observed - TIE_EPS;
    match mode {
        PermutationMode::Exhaustive => {
            if r1.len() > EXHAUSTIVE_MAX {
                return Err(RankingError::TooLongForExhaustive { got: r1.len(), max: EXHAUSTIVE_MAX });
            }
            let mut perm = base.clone();
            let (mut hits, mut total) = (0u64, 0u64);
            for_each_permutation(&mut perm, &mut |q| {
                total += 1;
                hits += u64::from(reaches(q));
            });
            Ok(hits as f64 / total as f64)
        }
        PermutationMode::Sampled { iterations, seed } => {
            if iterations == 0 {
                return Err(RankingError::NoIterations);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm = base.clone();
            let mut hits = 0u32;
            for _ in 0..iterations {
                perm.shuffle(&mut rng);
                hits += u32::from(reaches(&perm));
            }
            Ok(f64::from(hits) / f64::from(iterations))
        }
    }
}

/// Heap's algorithm.
fn for_each_permutation(items: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    let n = items.len();
    let mut c = alloc::vec![0usize; n];
    f(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            f(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// All agreement statistics for one pair of rankings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub left: String,
    pub right: String,
    pub n: usize,
    pub tau: f64,
    pub rbo: f64,
    pub z_score: f64,
    pub tau_p_value: f64,
    pub rbo_p_value: f64,
    pub persistence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationOptions {
    pub persistence: f64,
    pub rbo_variant: RboVariant,
    pub tau_variance: TauVariance,
    pub permutation: PermutationMode,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            persistence: DEFAULT_PERSISTENCE,
            rbo_variant: RboVariant::Conjoint,
            tau_variance: TauVariance::Simple,
            permutation: PermutationMode::Sampled { iterations: 1000, seed: 0 },
        }
    }
}

pub fn correlate(r1: &Ranking, r2: &Ranking, opts: &CorrelationOptions) -> Result<CorrelationResult, RankingError> {
    let tau = to_f64(&kendall_tau(r1, r2)?);
    let rbo_v = rbo(r1, r2, opts.persistence, opts.rbo_variant)?;
    let (z, tau_p) = tau_z_test(tau, r1.len(), opts.tau_variance)?;
    let rbo_p = rbo_permutation_test(r1, r2, opts.persistence, opts.rbo_variant, opts.permutation)?;
    Ok(CorrelationResult {
        left: r1.source.clone(),
        right: r2.source.clone(),
        n: r1.len(),
        tau,
        rbo: rbo_v,
        z_score: z,
        tau_p_value: tau_p,
        rbo_p_value: rbo_p,
        persistence: opts.persistence,
    })
}

/// One model's sort keys. `primary` sorts descending, `secondary` (if any)
/// ascending, then `avg_rounds` ascending, then id.
#[derive(Clone, Debug, PartialEq)]
pub struct RankKey {
    pub model: String,
    pub primary: Rational,
    pub secondary: Option<Rational>,
    pub avg_rounds: Rational,
}

/// Sorts keys into a ranking with the declared tie-break policy.
pub fn rank_by(source: &str, mut keys: Vec<RankKey>) -> Result<Ranking, RankingError> {
    keys.sort_by(|a, b| {
        b.primary
            .cmp(&a.primary)
            .then_with(|| a.secondary.cmp(&b.secondary))
            .then_with(|| a.avg_rounds.cmp(&b.avg_rounds))
            .then_with(|| a.model.cmp(&b.model))
    });
    let mut r = Ranking::new(source, keys.into_iter().map(|k| k.model))?;
    r.tie_break = TIE_BREAK_POLICY.to_string();
    Ok(r)
}

fn label(game: GameKind, family: &str) -> String {
    let g = game.as_str();
    let mut cap = String::with_capacity(g.len());
    let mut chars = g.chars();
    if let Some(c) = chars.next() {
        cap.extend(c.to_uppercase());
    }
    cap.push_str(chars.as_str());
    format!("{cap}-{family}")
}

fn missing(model: &str, metric: &str) -> RankingError {
    RankingError::Incomplete { model: model.to_string(), metric: metric.to_string() }
}

/// `<Game>-Outcome` and `<Game>-Retro` rankings for every game present in
/// the outcome reports.
pub fn build_rankings(outcome: &[OutcomeReport], procedural: &[ProceduralReport]) -> Result<Vec<Ranking>, RankingError> {
    let mut out = Vec::new();
    for game in GameKind::ALL {
        let reports: Vec<&OutcomeReport> = outcome.iter().filter(|r| r.game == game).collect();
        if reports.is_empty() {
            continue;
        }
        let keys = reports
            .iter()
            .map(|r| RankKey {
                model: r.model.clone(),
                primary: r.avg_win_rate(),
                secondary: None,
                avg_rounds: r.avg_rounds(),
            })
            .collect();
        out.push(rank_by(&label(game, "Outcome"), keys)?);

        let procs: Vec<&ProceduralReport> = procedural.iter().filter(|p| p.game == Some(game)).collect();
        if procs.is_empty() {
            continue;
        }
        let mut keys = Vec::new();
        for r in &reports {
            let p = procs.iter().find(|p| p.model == r.model).ok_or_else(|| missing(&r.model, "procedural report"))?;
            let key = match game {
                GameKind::Akinator | GameKind::Taboo => RankKey {
                    model: r.model.clone(),
                    primary: p.recall_rate.ok_or_else(|| missing(&r.model, "recall_rate"))?,
                    secondary: None,
                    avg_rounds: r.avg_rounds(),
                },
                GameKind::Bluffing => RankKey {
                    model: r.model.clone(),
                    // Lower is better for both, so the primary is negated.
                    primary: -p.avg_final_rank.ok_or_else(|| missing(&r.model, "avg_final_rank"))?,
                    secondary: Some(p.spearman_rho.ok_or_else(|| missing(&r.model, "spearman_rho"))?),
                    avg_rounds: r.avg_rounds(),
                },
            };
            keys.push(key);
        }
        out.push(rank_by(&label(game, "Retro"), keys)?);
    }
    Ok(out)
}

/// Orders models by an f64 score (descending), used for external fixtures.
pub fn order_desc(scores: &mut [(String, f64)]) {
    scores.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
}
