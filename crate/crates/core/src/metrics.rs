//! Outcome metrics (win rate, rounds) and procedural metrics computed from
//! retrospective traces. Aggregates are exact rationals; only the per-prompt
//! standard deviation is floating point.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::game::{GameKind, Role, Session, Status, TurnKind};
use crate::rational::{from_int, mean, ratio, to_f64, Rational};
use crate::retro::{JudgmentLevel, RankedList, RetroTrace};
use crate::text::normalize_item;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no finished sessions to aggregate")]
    EmptyCorpus,
    #[error("trace has no parsed lists")]
    NoParsedLists,
    #[error("need at least {need} judgments, got {got}")]
    TooFewJudgments { need: usize, got: usize },
    #[error("ground-truth level must be 1 or 5, got {0}")]
    InvalidTruthLevel(u8),
    #[error("prior list is empty")]
    ZeroSizeList,
    #[error("session secret is unknown")]
    UnknownSecret,
    #[error("no sessions carry subset tag(s): {0:?}")]
    MissingSubsets(Vec<String>),
}

/// Win count and rounds over a set of finished sessions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeStats {
    pub sessions: u32,
    pub wins: u32,
    pub total_rounds: u64,
    pub win_rate: Rational,
    pub avg_rounds: Rational,
}

impl OutcomeStats {
    /// Aggregates `(won, rounds)` pairs.
    pub fn from_pairs<I: IntoIterator<Item = (bool, u32)>>(pairs: I) -> Result<Self, MetricsError> {
        let (mut n, mut wins, mut rounds) = (0u32, 0u32, 0u64);
        for (won, r) in pairs {
            n += 1;
            wins += u32::from(won);
            rounds += u64::from(r);
        }
        if n == 0 {
            return Err(MetricsError::EmptyCorpus);
        }
        Ok(OutcomeStats {
            sessions: n,
            wins,
            total_rounds: rounds,
            win_rate: ratio(wins.into(), n.into()),
            avg_rounds: ratio(rounds.into(), n.into()),
        })
    }
}

/// Mean and population standard deviation of per-prompt values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        Some(Spread { mean: m, std: libm::sqrt(var) })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub model: String,
    pub game: GameKind,
    pub overall: OutcomeStats,
    /// Keyed by prompt id.
    pub per_prompt: BTreeMap<String, OutcomeStats>,
    pub prompt_win_rate: Spread,
    pub prompt_rounds: Spread,
}

impl OutcomeReport {
    pub fn avg_win_rate(&self) -> Rational {
        self.overall.win_rate
    }

    pub fn avg_rounds(&self) -> Rational {
        self.overall.avg_rounds
    }
}

fn counts_for_outcome(s: &Session) -> Option<(bool, u32)> {
    let o = s.outcome.as_ref()?;
    matches!(s.status, Status::ModelWon | Status::UserWon).then_some((o.win_indicator == 1, o.rounds))
}

/// Outcome metrics of `model` on `game`. Abandoned and unfinished sessions
/// are skipped.
pub fn outcome_metrics<'a, I>(model: &str, game: GameKind, corpus: I) -> Result<OutcomeReport, MetricsError>
where
    I: IntoIterator<Item = &'a Session>,
{
    let mut by_prompt: BTreeMap<String, Vec<(bool, u32)>> = BTreeMap::new();
    for s in corpus {
        if s.model_ref != model || s.game != game {
            continue;
        }
        if let Some(pair) = counts_for_outcome(s) {
            by_prompt.entry(s.prompt_ref.clone()).or_default().push(pair);
        }
    }
    let overall = OutcomeStats::from_pairs(by_prompt.values().flatten().copied())?;
    let per_prompt: BTreeMap<String, OutcomeStats> = by_prompt
        .into_iter()
        .map(|(k, v)| OutcomeStats::from_pairs(v).map(|s| (k, s)))
        .collect::<Result<_, _>>()?;
    let wr: Vec<f64> = per_prompt.values().map(|s| to_f64(&s.win_rate)).collect();
    let rd: Vec<f64> = per_prompt.values().map(|s| to_f64(&s.avg_rounds)).collect();
    Ok(OutcomeReport {
        model: model.to_string(),
        game,
        overall,
        prompt_win_rate: Spread::of(&wr).unwrap_or(Spread { mean: 0.0, std: 0.0 }),
        prompt_rounds: Spread::of(&rd).unwrap_or(Spread { mean: 0.0, std: 0.0 }),
        per_prompt,
    })
}

/// Matches candidate items against a secret by normalized text, with an
/// optional alias set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretMatcher {
    keys: Vec<String>,
}

impl SecretMatcher {
    pub fn new<S: AsRef<str>>(secret: &str, aliases: &[S]) -> Self {
        let mut keys: Vec<String> = Vec::with_capacity(aliases.len() + 1);
        for s in core::iter::once(secret).chain(aliases.iter().map(AsRef::as_ref)) {
            let k = normalize_item(s);
            if !k.is_empty() && !keys.contains(&k) {
                keys.push(k);
            }
        }
        SecretMatcher { keys }
    }

    /// Matcher for a session's known secret and its registered aliases.
    pub fn for_session(s: &Session) -> Result<Self, MetricsError> {
        let secret = s.secret.target_text().ok_or(MetricsError::UnknownSecret)?;
        Ok(Self::new(secret, &s.secret_aliases))
    }

    pub fn matches(&self, item: &str) -> bool {
        let k = normalize_item(item);
        self.keys.contains(&k)
    }

    /// 1-based rank of the secret in `list`.
    pub fn rank_in(&self, list: &RankedList) -> Option<usize> {
        list.items.iter().position(|i| self.matches(i)).map(|p| p + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recall {
    pub recall: Rational,
    pub top5: Rational,
    pub top10: Rational,
}

/// Fractions of parsed lists that contain the secret anywhere, in the top 5
/// and in the top 10.
pub fn recall_rates(trace: &RetroTrace, secret: &SecretMatcher) -> Result<Recall, MetricsError> {
    let ranks: Vec<Option<usize>> = trace.lists().map(|(_, l)| secret.rank_in(l)).collect();
    if ranks.is_empty() {
        return Err(MetricsError::NoParsedLists);
    }
    let n = ranks.len() as i128;
    let count = |k: usize| ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count() as i128;
    Ok(Recall {
        recall: ratio(count(usize::MAX), n),
        top5: ratio(count(5), n),
        top10: ratio(count(10), n),
    })
}

/// Labels one candidate item under a yes/no question.
pub trait PartitionClassifier {
    /// `None` when the item cannot be classified.
    fn classify(&mut self, question: &str, item: &str) -> Option<bool>;
}

impl<F: FnMut(&str, &str) -> Option<bool>> PartitionClassifier for F {
    fn classify(&mut self, question: &str, item: &str) -> Option<bool> {
        self(question, item)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub question: String,
    pub yes_items: Vec<String>,
    pub no_items: Vec<String>,
    pub unclassified: Vec<String>,
    /// Full size of the prior round's list.
    pub prior_size: usize,
}

impl PartitionResult {
    pub fn size_yes(&self) -> usize {
        self.yes_items.len()
    }

    pub fn size_no(&self) -> usize {
        self.no_items.len()
    }

    /// No item could be classified.
    pub fn is_degenerate(&self) -> bool {
        self.yes_items.is_empty() && self.no_items.is_empty()
    }
}

pub fn partition_objects(
    question: &str,
    prior: &RankedList,
    classifier: &mut dyn PartitionClassifier,
) -> PartitionResult {
    let mut p = PartitionResult {
        question: question.to_string(),
        yes_items: Vec::new(),
        no_items: Vec::new(),
        unclassified: Vec::new(),
        prior_size: prior.items.len(),
    };
    for item in &prior.items {
        match classifier.classify(question, item) {
            Some(true) => p.yes_items.push(item.clone()),
            Some(false) => p.no_items.push(item.clone()),
            None => p.unclassified.push(item.clone()),
        }
    }
    p
}

/// |yes - no| / size of the prior list.
pub fn disparity_ratio(p: &PartitionResult) -> Result<Rational, MetricsError> {
    if p.prior_size == 0 {
        return Err(MetricsError::ZeroSizeList);
    }
    let diff = (p.size_yes() as i128 - p.size_no() as i128).abs();
    Ok(ratio(diff, p.prior_size as i128))
}

/// Mean disparity over a session's yes/no questions from round 2 on, each
/// split against the list parsed at the previous round. Guesses and
/// degenerate partitions are skipped.
pub fn session_disparity(
    session: &Session,
    trace: &RetroTrace,
    classifier: &mut dyn PartitionClassifier,
) -> Option<Rational> {
    let lists: BTreeMap<u32, &RankedList> = trace.lists().collect();
    let mut values = Vec::new();
    for t in &session.turns {
        if t.role != Role::Model || t.kind != TurnKind::Ordinary || t.index < 2 {
            continue;
        }
        let Some(prior) = lists.get(&(t.index - 1)) else { continue };
        let p = partition_objects(&t.content, prior, classifier);
        if p.is_degenerate() {
            continue;
        }
        if let Ok(d) = disparity_ratio(&p) {
            values.push(d);
        }
    }
    mean(&values)
}

/// Round whose list first contains the secret, and the secret's rank in the
/// last parsed list.
pub fn first_appear_and_final_rank(trace: &RetroTrace, secret: &SecretMatcher) -> (Option<u32>, Option<usize>) {
    let first = trace.lists().find(|(_, l)| secret.rank_in(l).is_some()).map(|(r, _)| r);
    let last = trace.lists().last().and_then(|(_, l)| secret.rank_in(l));
    (first, last)
}

fn truth_distance(j: JudgmentLevel, g: u8) -> i128 {
    (i128::from(j.get()) - i128::from(g)).abs()
}

fn check_truth(g: u8) -> Result<(), MetricsError> {
    if g == 1 || g == 5 {
        Ok(())
    } else {
        Err(MetricsError::InvalidTruthLevel(g))
    }
}

/// 1 - 6 Σ d_i² / (N(N²-1)) with d_i = i - |j_i - g|, evaluated as written.
/// The value can fall outside [-1, 1].
pub fn spearman_consistency(judgments: &[JudgmentLevel], g: u8) -> Result<Rational, MetricsError> {
    check_truth(g)?;
    let n = judgments.len();
    if n < 2 {
        return Err(MetricsError::TooFewJudgments { need: 2, got: n });
    }
    let sum_sq: i128 = judgments
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let d = (i as i128 + 1) - truth_distance(j, g);
            d * d
        })
        .sum();
    let n = n as i128;
    Ok(from_int(1) - ratio(6 * sum_sq, n * (n * n - 1)))
}

/// Mean absolute step between consecutive judgments.
pub fn hopping_penalty(judgments: &[JudgmentLevel]) -> Result<Rational, MetricsError> {
    let n = judgments.len();
    if n < 2 {
        return Err(MetricsError::TooFewJudgments { need: 2, got: n });
    }
    let steps: i128 = judgments
        .windows(2)
        .map(|w| (i128::from(w[1].get()) - i128::from(w[0].get())).abs())
        .sum();
    Ok(ratio(steps, n as i128 - 1))
}

/// When a Bluffing judgment counts as correct.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstCorrectRule {
    /// Only the exact ground-truth level.
    #[default]
    Strict,
    /// Any level on the ground-truth side ("Possibly true" counts for True).
    SameSide,
}

/// First round with a correct judgment and the final distance |j_N - g|.
pub fn bluffing_first_and_final(
    judgments: &[JudgmentLevel],
    g: u8,
    rule: FirstCorrectRule,
) -> Result<(Option<u32>, u8), MetricsError> {
    check_truth(g)?;
    let last = judgments.last().ok_or(MetricsError::TooFewJudgments { need: 1, got: 0 })?;
    let correct = |j: &JudgmentLevel| match rule {
        FirstCorrectRule::Strict => j.get() == g,
        FirstCorrectRule::SameSide => truth_distance(*j, g) <= 1,
    };
    let first = judgments.iter().position(correct).map(|p| p as u32 + 1);
    Ok((first, truth_distance(*last, g) as u8))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BluffingRecall {
    /// Correct final verdicts over sessions that issued one.
    pub recall: Rational,
    pub with_verdict: u32,
    pub without_verdict: u32,
}

impl BluffingRecall {
    pub fn no_verdict_rate(&self) -> Rational {
        ratio(self.without_verdict.into(), i128::from(self.with_verdict + self.without_verdict))
    }
}

/// Fraction of Bluffing sessions whose final verdict matches the truth.
/// Sessions without a verdict are counted separately.
pub fn bluffing_recall<'a, I>(sessions: I) -> Result<BluffingRecall, MetricsError>
where
    I: IntoIterator<Item = &'a Session>,
{
    let (mut hit, mut with, mut without) = (0u32, 0u32, 0u32);
    for s in sessions {
        let Some(truth) = s.secret.truthful() else { continue };
        match s.final_verdict() {
            Some(v) => {
                with += 1;
                hit += u32::from(v == truth);
            }
            None => without += 1,
        }
    }
    if with == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    Ok(BluffingRecall { recall: ratio(hit.into(), with.into()), with_verdict: with, without_verdict: without })
}

/// All procedural metrics for one model on one game.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProceduralReport {
    pub model: String,
    pub game: Option<GameKind>,
    pub sessions: u32,
    pub recall_rate: Option<Rational>,
    pub top5_recall: Option<Rational>,
    pub top10_recall: Option<Rational>,
    pub disparity_ratio: Option<Rational>,
    pub avg_first_appear_round: Option<Rational>,
    pub avg_final_rank: Option<Rational>,
    /// Sessions left out of `avg_final_rank` because the secret was missing
    /// from the last list.
    pub final_rank_missing: u32,
    pub spearman_rho: Option<Rational>,
    pub hopping_penalty: Option<Rational>,
    pub bluffing_recall: Option<Rational>,
    pub no_verdict_rate: Option<Rational>,
    pub flagged_entries: u32,
    pub failed_entries: u32,
}

/// Aggregates per-session procedural metrics as unweighted means over the
/// sessions where each metric is defined.
pub fn procedural_metrics(
    model: &str,
    game: GameKind,
    pairs: &[(&Session, &RetroTrace)],
    mut classifier: Option<&mut dyn PartitionClassifier>,
    rule: FirstCorrectRule,
) -> Result<ProceduralReport, MetricsError> {
    let mine: Vec<&(&Session, &RetroTrace)> = pairs
        .iter()
        .filter(|(s, _)| s.model_ref == model && s.game == game && counts_for_outcome(s).is_some())
        .collect();
    if mine.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut rep = ProceduralReport {
        model: model.to_string(),
        game: Some(game),
        sessions: mine.len() as u32,
        ..Default::default()
    };
    let (mut recall, mut top5, mut top10, mut disp, mut first, mut fin) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut rho, mut hop) = (Vec::new(), Vec::new());
    for (s, t) in &mine {
        let (flagged, failed) = t.quality();
        rep.flagged_entries += flagged as u32;
        rep.failed_entries += failed as u32;
        match game {
            GameKind::Akinator | GameKind::Taboo => {
                let Ok(m) = SecretMatcher::for_session(s) else { continue };
                let Ok(r) = recall_rates(t, &m) else { continue };
                recall.push(r.recall);
                top5.push(r.top5);
                top10.push(r.top10);
                let (f, last) = first_appear_and_final_rank(t, &m);
                if let Some(f) = f {
                    first.push(from_int(f.into()));
                }
                match last {
                    Some(rank) => fin.push(from_int(rank as i128)),
                    None => rep.final_rank_missing += 1,
                }
                if game == GameKind::Akinator {
                    if let Some(c) = classifier.as_deref_mut() {
                        if let Some(d) = session_disparity(s, t, c) {
                            disp.push(d);
                        }
                    }
                }
            }
            GameKind::Bluffing => {
                let Some(truth) = s.secret.truthful() else { continue };
                let g = JudgmentLevel::from_truth(truth).get();
                let js = t.judgments();
                if let Ok(v) = spearman_consistency(&js, g) {
                    rho.push(v);
                }
                if let Ok(v) = hopping_penalty(&js) {
                    hop.push(v);
                }
                if let Ok((f, d)) = bluffing_first_and_final(&js, g, rule) {
                    if let Some(f) = f {
                        first.push(from_int(f.into()));
                    }
                    fin.push(from_int(d.into()));
                }
            }
        }
    }
    rep.recall_rate = mean(&recall);
    rep.top5_recall = mean(&top5);
    rep.top10_recall = mean(&top10);
    rep.disparity_ratio = mean(&disp);
    rep.avg_first_appear_round = mean(&first);
    rep.avg_final_rank = mean(&fin);
    rep.spearman_rho = mean(&rho);
    rep.hopping_penalty = mean(&hop);
    if game == GameKind::Bluffing {
        if let Ok(b) = bluffing_recall(mine.iter().map(|(s, _)| *s)) {
            rep.bluffing_recall = Some(b.recall);
            rep.no_verdict_rate = Some(b.no_verdict_rate());
        }
    }
    Ok(rep)
}

/// Outcome reports of one model/game on two tagged subsets. `None` marks a
/// subset where the model has no sessions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetPair {
    pub model: String,
    pub game: GameKind,
    pub a: Option<OutcomeReport>,
    pub b: Option<OutcomeReport>,
}

/// Computes outcome metrics independently on the sessions tagged `tag_a`
/// and those tagged `tag_b`.
pub fn compare_subsets(
    corpus: &[(Option<&str>, &Session)],
    tag_a: &str,
    tag_b: &str,
) -> Result<Vec<SubsetPair>, MetricsError> {
    let missing: Vec<String> = [tag_a, tag_b]
        .into_iter()
        .filter(|tag| !corpus.iter().any(|(t, _)| *t == Some(*tag)))
        .map(ToString::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::MissingSubsets(missing));
    }
    let mut keys: Vec<(String, GameKind)> = corpus
        .iter()
        .filter(|(t, _)| *t == Some(tag_a) || *t == Some(tag_b))
        .map(|(_, s)| (s.model_ref.clone(), s.game))
        .collect();
    keys.sort();
    keys.dedup();
    fn subset<'a>(corpus: &'a [(Option<&str>, &'a Session)], tag: &'a str) -> impl Iterator<Item = &'a Session> {
        corpus.iter().filter(move |(t, _)| *t == Some(tag)).map(|(_, s)| *s)
    }
    Ok(keys
        .into_iter()
        .map(|(model, game)| SubsetPair {
            a: outcome_metrics(&model, game, subset(corpus, tag_a)).ok(),
            b: outcome_metrics(&model, game, subset(corpus, tag_b)).ok(),
            model,
            game,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn jl(v: &[u8]) -> Vec<JudgmentLevel> {
        v.iter().map(|&x| JudgmentLevel::new(x).unwrap()).collect()
    }

    #[test]
    fn outcome_pairs() {
        let s = OutcomeStats::from_pairs([(true, 16), (false, 20), (true, 14)]).unwrap();
        assert_eq!(s.win_rate, ratio(2, 3));
        assert_eq!(s.avg_rounds, ratio(50, 3));
        let s = OutcomeStats::from_pairs([(true, 3)]).unwrap();
        assert_eq!((s.win_rate, s.avg_rounds), (from_int(1), from_int(3)));
        assert_eq!(OutcomeStats::from_pairs([]), Err(MetricsError::EmptyCorpus));
    }

    #[test]
    fn disparity_examples() {
        let p = |y: usize, n: usize, size: usize| PartitionResult {
            question: String::new(),
            yes_items: vec![String::new(); y],
            no_items: vec![String::new(); n],
            unclassified: vec![],
            prior_size: size,
        };
        assert_eq!(disparity_ratio(&p(5, 5, 10)).unwrap(), from_int(0));
        assert_eq!(disparity_ratio(&p(8, 2, 10)).unwrap(), ratio(3, 5));
        assert_eq!(disparity_ratio(&p(7, 3, 10)).unwrap(), ratio(2, 5));
        assert_eq!(disparity_ratio(&p(0, 0, 0)), Err(MetricsError::ZeroSizeList));
    }

    #[test]
    fn partition_with_table() {
        let list = RankedList { items: vec!["Key".into(), "Coin".into(), "Marble".into(), "Pen".into()], ..Default::default() };
        let mut metal = |_: &str, item: &str| Some(matches!(item, "Key" | "Coin"));
        let p = partition_objects("Is it made of metal?", &list, &mut metal);
        assert_eq!(p.yes_items, ["Key", "Coin"]);
        assert_eq!(p.no_items, ["Marble", "Pen"]);
        let mut none = |_: &str, _: &str| None;
        let p = partition_objects("?", &list, &mut none);
        assert!(p.is_degenerate());
        assert_eq!(p.unclassified.len(), 4);
    }

    #[test]
    fn spearman_examples() {
        assert_eq!(spearman_consistency(&jl(&[4, 4, 2, 2, 1]), 1).unwrap(), ratio(-23, 20));
        assert_eq!(spearman_consistency(&jl(&[1, 1, 1, 1, 1]), 1).unwrap(), ratio(-7, 4));
        assert_eq!(spearman_consistency(&jl(&[3, 3]), 1).unwrap(), from_int(0));
        assert!(spearman_consistency(&jl(&[3]), 1).is_err());
        assert!(spearman_consistency(&jl(&[3, 3]), 2).is_err());
    }

    #[test]
    fn hopping_examples() {
        assert_eq!(hopping_penalty(&jl(&[4, 4, 2, 2, 1])).unwrap(), ratio(3, 4));
        assert_eq!(hopping_penalty(&jl(&[2, 2, 2])).unwrap(), from_int(0));
        assert_eq!(hopping_penalty(&jl(&[1, 5, 1])).unwrap(), from_int(4));
    }

    #[test]
    fn bluffing_first_final() {
        let s = FirstCorrectRule::Strict;
        assert_eq!(bluffing_first_and_final(&jl(&[4, 4, 2, 2, 1]), 1, s).unwrap(), (Some(5), 0));
        assert_eq!(bluffing_first_and_final(&jl(&[3, 4]), 1, s).unwrap(), (None, 3));
        assert_eq!(bluffing_first_and_final(&jl(&[5]), 5, s).unwrap(), (Some(1), 0));
        let loose = FirstCorrectRule::SameSide;
        assert_eq!(bluffing_first_and_final(&jl(&[4, 4, 2, 2, 1]), 1, loose).unwrap(), (Some(3), 0));
    }

    #[test]
    fn matcher_normalizes() {
        let m = SecretMatcher::new("an electric guitar", &[] as &[&str]);
        assert!(m.matches("Electric Guitar"));
        assert!(m.matches("electric guitars"));
        assert!(!m.matches("Guitar"));
        let m = SecretMatcher::new("Samoa", &["Samoan"]);
        assert!(m.matches("Samoan"));
    }

    #[test]
    fn recall_counting() {
        let mut t = RetroTrace {
            session_id: crate::SessionId("s".into()),
            game: GameKind::Akinator,
            model_ref: "m".into(),
            entries: vec![],
        };
        let lists: [&[&str]; 4] = [
            &["x", "a"],
            &["a"],
            &["b", "c", "d", "e", "f", "a"],
            &["z"],
        ];
        for (i, l) in lists.iter().enumerate() {
            let raw: String = l.iter().map(|x| alloc::format!("** Object: {x} **\n")).collect();
            t.entries.push(crate::retro::RetroEntry::parse(GameKind::Akinator, i as u32 + 1, raw));
        }
        let m = SecretMatcher::new("a", &[] as &[&str]);
        let r = recall_rates(&t, &m).unwrap();
        assert_eq!((r.recall, r.top5, r.top10), (ratio(3, 4), ratio(1, 2), ratio(3, 4)));
        assert_eq!(first_appear_and_final_rank(&t, &m), (Some(1), None));
        let none = SecretMatcher::new("q", &[] as &[&str]);
        let r = recall_rates(&t, &none).unwrap();
        assert_eq!((r.recall, r.top5, r.top10), (from_int(0), from_int(0), from_int(0)));
    }

    #[test]
    fn spread_is_population() {
        let s = Spread::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }
}
