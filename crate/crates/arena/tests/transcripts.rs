mod common;

use common::{load_fixture, replay_fixture};
use gamearena_core::metrics::{first_appear_and_final_rank, SecretMatcher};
use gamearena_core::retro::{parse_judgment, parse_ranked_list, RetroOutput};
use gamearena_core::{GameKind, Prediction, Role, Status};

fn status(s: &str) -> Status {
    serde_json::from_value(serde_json::Value::String(s.into())).unwrap()
}

#[test]
fn akinator_guitar_plays_out() {
    let f = load_fixture("akinator");
    let (s, trace) = replay_fixture(&f);
    assert_eq!(s.status, status(&f.expect.status));
    let out = s.outcome.as_ref().unwrap();
    assert_eq!(Some(out.rounds), f.expect.rounds);
    assert_eq!(out.win_indicator, 1);
    let last = s.turns.last().unwrap();
    assert_eq!(last.role, Role::Model);
    assert_eq!(last.prediction, Some(Prediction::Akinator(f.expect.guess.clone().unwrap())));
    assert!(s.turns.iter().filter(|t| t.role == Role::Model).all(|t| !t.numbering_violation));

    // The winning guess is not replayed, so one fewer point than printed lists.
    let rounds: Vec<u32> = trace.entries.iter().map(|e| e.round).collect();
    assert_eq!(rounds, (1..=14).collect::<Vec<_>>());
    for (round, list) in trace.lists() {
        assert_eq!(list.items, f.expect_lists[round as usize - 1], "round {round}");
    }
}

#[test]
fn akinator_printed_lists_parse_exactly() {
    let f = load_fixture("akinator");
    assert_eq!(f.retro.len(), f.expect_lists.len());
    for (r, want) in f.retro.iter().zip(&f.expect_lists) {
        let got = parse_ranked_list(&r.raw, GameKind::Akinator).unwrap();
        assert_eq!(&got.items, want, "round {}", r.round);
        // Printed as a bare comma list, so the fallback parser handles it.
        assert!(got.low_confidence && !got.truncated);
        assert!(!got.rationale.is_empty());
    }
}

#[test]
fn taboo_samoa_plays_out() {
    let f = load_fixture("taboo");
    let (s, trace) = replay_fixture(&f);
    assert_eq!(s.status, status(&f.expect.status));
    let out = s.outcome.as_ref().unwrap();
    assert_eq!(Some(out.rounds), f.expect.rounds);
    assert_eq!(out.user_feedback, None);
    assert_eq!(s.turns.last().unwrap().prediction, Some(Prediction::Taboo(f.expect.guess.clone().unwrap())));
    assert!(s.turns.iter().all(|t| !t.rule_violation));

    let got: Vec<(u32, Vec<String>)> = trace.lists().map(|(r, l)| (r, l.items.clone())).collect();
    let want: Vec<(u32, Vec<String>)> =
        f.retro.iter().map(|r| r.round).zip(f.expect_lists.iter().cloned()).collect();
    assert_eq!(got, want);

    // "Samoan" tops the round 3 list and counts as the secret.
    let m = SecretMatcher::for_session(&s).unwrap();
    let (first, final_rank) = first_appear_and_final_rank(&trace, &m);
    assert_eq!(first, Some(3));
    assert_eq!(final_rank, Some(1));
}

#[test]
fn bluffing_teacher_plays_out() {
    let f = load_fixture("bluffing");
    let (s, trace) = replay_fixture(&f);
    assert_eq!(s.status, status(&f.expect.status));
    assert_eq!(s.final_verdict(), f.expect.verdict);
    match &s.secret {
        gamearena_core::Secret::Statement { text, .. } => assert_eq!(text.as_deref(), f.secret.as_deref()),
        other => panic!("unexpected secret {other:?}"),
    }
    assert_eq!(s.secret.truthful(), Some(true));

    let levels: Vec<u8> = trace.judgments().iter().map(|j| j.get()).collect();
    assert_eq!(levels, f.expect_judgments);
    assert_eq!(trace.entries.first().map(|e| e.round), Some(0));
    assert!(trace.entries.iter().all(|e| !matches!(e.output, RetroOutput::Failed { .. })));
}

#[test]
fn bluffing_printed_judgments_parse() {
    let f = load_fixture("bluffing");
    let got: Vec<u8> = f.retro.iter().map(|r| parse_judgment(&r.raw)).inspect(|p| assert!(!p.flagged)).map(|p| p.level.get()).collect();
    assert_eq!(got, f.expect_judgments);
}
