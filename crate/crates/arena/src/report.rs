//! Metric reports, rankings and leaderboards built from a stored corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use gamearena_core::metrics::{
    compare_subsets, outcome_metrics, procedural_metrics, FirstCorrectRule, MetricsError, OutcomeReport,
    PartitionClassifier, ProceduralReport, SubsetPair,
};
use gamearena_core::ranking::{build_rankings, Ranking, RankingError};
use gamearena_core::rational::to_f64;
use gamearena_core::{GameKind, Rational, RetroTrace, Session, SessionId};
use serde::{Deserialize, Serialize};

use crate::store::{useful_data_rate, SessionRecord, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no finished sessions match the request")]
    NoData,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Outcome,
    Retro,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "outcome" => Ok(Family::Outcome),
            "retro" | "procedural" => Ok(Family::Retro),
            other => Err(format!("unknown metric family `{other}`")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataQuality {
    pub sessions: usize,
    pub complete: usize,
    pub useful_data_rate: Option<Rational>,
    pub traces: usize,
    pub flagged_entries: u32,
    pub failed_entries: u32,
}

/// Everything `metrics` computes over one corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub outcome: Vec<OutcomeReport>,
    pub procedural: Vec<ProceduralReport>,
    pub rankings: Vec<Ranking>,
    pub quality: DataQuality,
}

/// Builds outcome and procedural reports for every (model, game) present in
/// `records`, and the rankings they support. Procedural reports need traces;
/// a game whose models lack them only gets an outcome ranking.
pub fn compute(
    records: &[SessionRecord],
    traces: &BTreeMap<SessionId, TraceRecord>,
    mut classifier: Option<&mut dyn PartitionClassifier>,
    rule: FirstCorrectRule,
) -> Result<MetricsBundle, ReportError> {
    let sessions: Vec<&Session> = records.iter().map(|r| &r.session).collect();
    let keys: BTreeSet<(GameKind, String)> = sessions.iter().map(|s| (s.game, s.model_ref.clone())).collect();
    let pairs: Vec<(&Session, &RetroTrace)> = sessions
        .iter()
        .filter_map(|s| traces.get(&s.session_id).map(|t| (*s, &t.trace)))
        .collect();

    let mut outcome = Vec::new();
    let mut procedural = Vec::new();
    for (game, model) in &keys {
        match outcome_metrics(model, *game, sessions.iter().copied()) {
            Ok(r) => outcome.push(r),
            Err(MetricsError::EmptyCorpus) => continue,
            Err(e) => return Err(e.into()),
        }
        let c: Option<&mut dyn PartitionClassifier> = match classifier {
            Some(ref mut c) => Some(&mut **c),
            None => None,
        };
        match procedural_metrics(model, *game, &pairs, c, rule) {
            Ok(r) => procedural.push(r),
            Err(MetricsError::EmptyCorpus) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if outcome.is_empty() {
        return Err(ReportError::NoData);
    }

    let mut rankings = Vec::new();
    for game in GameKind::ALL {
        let o: Vec<OutcomeReport> = outcome.iter().filter(|r| r.game == game).cloned().collect();
        if o.len() < 2 {
            continue;
        }
        let p: Vec<ProceduralReport> = procedural.iter().filter(|r| r.game == Some(game)).cloned().collect();
        match build_rankings(&o, &p) {
            Ok(rs) => rankings.extend(rs),
            Err(RankingError::Incomplete { .. }) => rankings.extend(build_rankings(&o, &[])?),
            Err(e) => return Err(e.into()),
        }
    }

    let quality = DataQuality {
        sessions: records.len(),
        complete: records.iter().filter(|r| r.is_complete()).count(),
        useful_data_rate: useful_data_rate(records),
        traces: pairs.len(),
        flagged_entries: procedural.iter().map(|p| p.flagged_entries).sum(),
        failed_entries: procedural.iter().map(|p| p.failed_entries).sum(),
    };
    Ok(MetricsBundle { outcome, procedural, rankings, quality })
}

/// One metric value of one model on one game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub model: String,
    pub game: GameKind,
    pub family: Family,
    pub metric: String,
    pub value: f64,
    /// Exact value as `[numerator, denominator]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<Rational>,
    /// Per-prompt standard deviation, where it applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

fn rec(model: &str, game: GameKind, family: Family, metric: &str, v: Rational, std: Option<f64>) -> MetricRecord {
    MetricRecord { model: model.into(), game, family, metric: metric.into(), value: to_f64(&v), exact: Some(v), std }
}

/// Flattens a bundle into one record per model, game and metric.
pub fn metric_records(bundle: &MetricsBundle) -> Vec<MetricRecord> {
    let mut out = Vec::new();
    for r in &bundle.outcome {
        let g = r.game;
        out.push(rec(&r.model, g, Family::Outcome, "win_rate", r.avg_win_rate(), Some(r.prompt_win_rate.std)));
        out.push(rec(&r.model, g, Family::Outcome, "avg_rounds", r.avg_rounds(), Some(r.prompt_rounds.std)));
    }
    for p in &bundle.procedural {
        let Some(g) = p.game else { continue };
        let fields = [
            ("recall_rate", p.recall_rate),
            ("top5_recall", p.top5_recall),
            ("top10_recall", p.top10_recall),
            ("disparity_ratio", p.disparity_ratio),
            ("avg_first_appear_round", p.avg_first_appear_round),
            ("avg_final_rank", p.avg_final_rank),
            ("spearman_rho", p.spearman_rho),
            ("hopping_penalty", p.hopping_penalty),
            ("bluffing_recall", p.bluffing_recall),
            ("no_verdict_rate", p.no_verdict_rate),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                out.push(rec(&p.model, g, Family::Retro, name, v, None));
            }
        }
    }
    out
}

fn fmt_opt(v: Option<Rational>) -> String {
    v.map_or_else(|| "N/A".into(), |v| format!("{:.3}", to_f64(&v)))
}

/// Plain-text tables: outcome, procedural, rankings, data quality.
pub fn render_text(bundle: &MetricsBundle) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Outcome metrics");
    let _ = writeln!(s, "{:<10} {:<16} {:>8} {:>16} {:>16}", "game", "model", "n", "win rate", "avg rounds");
    for r in &bundle.outcome {
        let _ = writeln!(
            s,
            "{:<10} {:<16} {:>8} {:>9.3} ±{:<5.3} {:>9.3} ±{:<5.3}",
            r.game.as_str(),
            r.model,
            r.overall.sessions,
            to_f64(&r.avg_win_rate()),
            r.prompt_win_rate.std,
            to_f64(&r.avg_rounds()),
            r.prompt_rounds.std
        );
    }
    let _ = writeln!(s, "\nProcedural metrics");
    let _ = writeln!(
        s,
        "{:<10} {:<16} {:>6} {:>8} {:>8} {:>8} {:>9} {:>8} {:>8} {:>8} {:>8}",
        "game", "model", "n", "recall", "top5", "top10", "disparity", "first", "final", "rho", "hop"
    );
    for p in &bundle.procedural {
        let _ = writeln!(
            s,
            "{:<10} {:<16} {:>6} {:>8} {:>8} {:>8} {:>9} {:>8} {:>8} {:>8} {:>8}",
            p.game.map_or("-", GameKind::as_str),
            p.model,
            p.sessions,
            fmt_opt(p.recall_rate),
            fmt_opt(p.top5_recall),
            fmt_opt(p.top10_recall),
            fmt_opt(p.disparity_ratio),
            fmt_opt(p.avg_first_appear_round),
            fmt_opt(p.avg_final_rank),
            fmt_opt(p.spearman_rho),
            fmt_opt(p.hopping_penalty),
        );
    }
    let _ = writeln!(s, "\nRankings");
    for r in &bundle.rankings {
        let _ = writeln!(s, "{:<18} {}", r.source, r.models.join(" > "));
    }
    let q = &bundle.quality;
    let _ = writeln!(
        s,
        "\nData quality: {} sessions, {} complete (useful rate {}), {} traces, {} flagged and {} failed retro entries",
        q.sessions,
        q.complete,
        fmt_opt(q.useful_data_rate),
        q.traces,
        q.flagged_entries,
        q.failed_entries
    );
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub model: String,
    pub headline_metric: String,
    pub value: f64,
    /// Per-prompt standard deviation of the headline metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bar: Option<f64>,
    pub avg_rounds: f64,
    pub sessions: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardTable {
    pub source: String,
    pub game: GameKind,
    pub family: Family,
    pub tie_break: String,
    pub rows: Vec<LeaderboardRow>,
}

fn source_of(label: &str) -> Option<(GameKind, Family)> {
    let (g, f) = label.split_once('-')?;
    Some((g.to_ascii_lowercase().parse().ok()?, f.parse().ok()?))
}

/// Rankings with headline metrics, optionally narrowed to one game or family.
pub fn leaderboard(
    bundle: &MetricsBundle,
    game: Option<GameKind>,
    family: Option<Family>,
) -> Result<Vec<LeaderboardTable>, ReportError> {
    let mut out = Vec::new();
    for r in &bundle.rankings {
        let Some((g, f)) = source_of(&r.source) else { continue };
        if game.is_some_and(|x| x != g) || family.is_some_and(|x| x != f) {
            continue;
        }
        let mut rows = Vec::new();
        for (i, m) in r.models.iter().enumerate() {
            let Some(o) = bundle.outcome.iter().find(|o| o.game == g && &o.model == m) else { continue };
            let p = bundle.procedural.iter().find(|p| p.game == Some(g) && &p.model == m);
            let (name, value, err) = match (f, g) {
                (Family::Outcome, _) => ("win_rate", to_f64(&o.avg_win_rate()), Some(o.prompt_win_rate.std)),
                (Family::Retro, GameKind::Bluffing) => {
                    ("avg_final_rank", p.and_then(|p| p.avg_final_rank).map_or(f64::NAN, |v| to_f64(&v)), None)
                }
                (Family::Retro, _) => {
                    ("recall_rate", p.and_then(|p| p.recall_rate).map_or(f64::NAN, |v| to_f64(&v)), None)
                }
            };
            rows.push(LeaderboardRow {
                rank: i + 1,
                model: m.clone(),
                headline_metric: name.into(),
                value,
                error_bar: err,
                avg_rounds: to_f64(&o.avg_rounds()),
                sessions: o.overall.sessions,
            });
        }
        out.push(LeaderboardTable { source: r.source.clone(), game: g, family: f, tie_break: r.tie_break.clone(), rows });
    }
    if out.is_empty() {
        return Err(ReportError::NoData);
    }
    Ok(out)
}

/// Outcome reports on two tagged subsets of the stored corpus.
pub fn subset_comparison(records: &[SessionRecord], tag_a: &str, tag_b: &str) -> Result<Vec<SubsetPair>, ReportError> {
    let corpus: Vec<(Option<&str>, &Session)> =
        records.iter().map(|r| (r.subset_tag.as_deref(), &r.session)).collect();
    Ok(compare_subsets(&corpus, tag_a, tag_b)?)
}

/// Text table of a subset comparison; a missing side prints as "missing".
pub fn render_subsets(pairs: &[SubsetPair], tag_a: &str, tag_b: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:<16} {:>22} {:>22}", "game", "model", tag_a, tag_b);
    let cell = |r: &Option<OutcomeReport>| {
        r.as_ref().map_or_else(
            || "missing".to_string(),
            |r| format!("{:.3} / {:.2}", to_f64(&r.avg_win_rate()), to_f64(&r.avg_rounds())),
        )
    };
    for p in pairs {
        let _ = writeln!(s, "{:<10} {:<16} {:>22} {:>22}", p.game.as_str(), p.model, cell(&p.a), cell(&p.b));
    }
    s
}
