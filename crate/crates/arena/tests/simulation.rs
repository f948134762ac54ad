mod common;

use std::sync::Arc;

use gamearena::config::ArenaConfig;
use gamearena::gateway::Gateway;
use gamearena::sim::{
    retro_corpus, run_simulated_session, simulate_corpus, simulate_into, HumanScript, Ontology, ScriptedHuman,
    SimAssets, SimEnv, SimError, SimOptions,
};
use gamearena::store::{CorpusFilter, Store};
use gamearena_core::game::AKINATOR_OPENING;
use gamearena_core::pairing::InferenceParams;
use gamearena_core::{GameKind, Role, Session, Status};
use proptest::prelude::*;

struct World {
    cfg: ArenaConfig,
    gateway: Gateway,
    assets: Arc<SimAssets>,
    prompts: Vec<gamearena_core::pairing::PromptRef>,
}

fn world() -> World {
    let cfg = ArenaConfig::simulation();
    let assets = Arc::new(SimAssets::builtin());
    let gateway = Gateway::from_config(&cfg, assets.clone()).unwrap();
    let prompts = cfg.prompt_pool().unwrap();
    World { cfg, gateway, assets, prompts }
}

fn run(w: &World, opts: &SimOptions) -> Vec<Session> {
    let models = w.cfg.model_refs();
    let env = SimEnv { models: &models, prompts: &w.prompts, gateway: &w.gateway, assets: &w.assets, params: &w.cfg.params };
    simulate_corpus(&env, opts).unwrap()
}

fn check_invariants(s: &Session) {
    assert!(s.status.is_terminal(), "{} left {:?}", s.session_id, s.status);
    assert!(s.round_count <= s.config.max_rounds);
    match s.game {
        GameKind::Taboo => {
            assert!(s.turns.iter().filter(|t| t.role == Role::User).all(|t| !t.rule_violation));
            assert!(s.turns.iter().filter(|t| t.role == Role::User).all(|t| t.content.chars().count() <= 140));
        }
        GameKind::Akinator => assert_eq!(s.turns[0].content, AKINATOR_OPENING),
        GameKind::Bluffing => {
            let questions = s.turns.iter().filter(|t| t.role == Role::Model && t.prediction.is_none()).count();
            assert!(questions <= s.config.max_rounds as usize + 1);
        }
    }
    if let Some(o) = &s.outcome {
        assert_eq!(o.win_indicator == 1, s.status == Status::ModelWon);
    }
}

#[test]
fn same_seed_same_corpus() {
    let w = world();
    let opts = SimOptions { sessions: 24, seed: 9, ..Default::default() };
    let a = run(&w, &opts);
    let b = run(&w, &opts);
    assert_eq!(a, b);
    let c = run(&w, &SimOptions { seed: 10, ..opts.clone() });
    assert_ne!(a, c);
    for s in &a {
        check_invariants(s);
    }
    assert_eq!(a[0].session_id.as_str(), "sim-9-00000");
    assert_eq!(a[1].created_at - a[0].created_at, 60_000);
}

#[test]
fn stored_corpora_are_byte_identical() {
    let w = world();
    let models = w.cfg.model_refs();
    let env = SimEnv { models: &models, prompts: &w.prompts, gateway: &w.gateway, assets: &w.assets, params: &w.cfg.params };
    let opts = SimOptions { sessions: 15, seed: 4, subsets: vec!["a".into(), "b".into()], ..Default::default() };
    let digests: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let store = Store::open(dir.path()).unwrap();
            assert_eq!(simulate_into(&store, &env, &opts).unwrap(), 15);
            retro_corpus(&store, &w.gateway, &w.prompts, &CorpusFilter::default()).unwrap();
            let tagged = store.load(&CorpusFilter { subset_tag: Some("b".into()), ..Default::default() }).unwrap();
            assert_eq!(tagged.len(), 7);
            store.digest().unwrap()
        })
        .collect();
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn retro_runs_once_and_resumes() {
    let w = world();
    let models = w.cfg.model_refs();
    let env = SimEnv { models: &models, prompts: &w.prompts, gateway: &w.gateway, assets: &w.assets, params: &w.cfg.params };
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    simulate_into(&store, &env, &SimOptions { sessions: 20, seed: 2, ..Default::default() }).unwrap();
    let finished = store
        .load(&CorpusFilter::default())
        .unwrap()
        .iter()
        .filter(|r| matches!(r.session.status, Status::ModelWon | Status::UserWon))
        .count();
    let (done, failed) = retro_corpus(&store, &w.gateway, &w.prompts, &CorpusFilter::default()).unwrap();
    assert_eq!((done, failed), (finished, 0));
    assert_eq!(retro_corpus(&store, &w.gateway, &w.prompts, &CorpusFilter::default()).unwrap(), (0, 0));
    for rec in store.load_traces().unwrap().values() {
        let (flagged, failed) = rec.trace.quality();
        assert_eq!((flagged, failed), (0, 0), "{}", rec.trace.session_id);
    }
}

#[test]
fn skill_shows_in_win_rates() {
    let w = world();
    let sessions = run(&w, &SimOptions { sessions: 150, seed: 1, games: vec![GameKind::Akinator], ..Default::default() });
    let stats = |m: &str| {
        let of: Vec<&Session> = sessions.iter().filter(|s| s.model_ref == m).collect();
        let won = of.iter().filter(|s| s.status == Status::ModelWon).count() as f64 / of.len() as f64;
        let rounds = of.iter().map(|s| f64::from(s.round_count)).sum::<f64>() / of.len() as f64;
        (won, rounds)
    };
    let (strong, weak) = (stats("sim-a"), stats("sim-e"));
    assert!(strong.0 > weak.0 + 0.15, "{strong:?} vs {weak:?}");
    assert!(strong.1 + 4.0 < weak.1, "{strong:?} vs {weak:?}");
}

#[test]
fn bad_scripts_are_rejected() {
    let onto = Arc::new(Ontology::builtin());
    let no_such = HumanScript::Akinator { object: "a flux capacitor".into() };
    assert!(matches!(ScriptedHuman::new(no_such, onto.clone(), 0.0, 1), Err(SimError::Script(_))));
    let leaky = HumanScript::Taboo { word: "violin".into(), clues: vec!["a small violin".into()] };
    assert!(ScriptedHuman::new(leaky, onto.clone(), 0.0, 1).is_err());
    let long = HumanScript::Taboo { word: "violin".into(), clues: vec!["y".repeat(141)] };
    assert!(ScriptedHuman::new(long, onto.clone(), 0.0, 1).is_err());
    let empty = HumanScript::Bluffing { statement: "I can juggle".into(), truthful: true, answers: vec![] };
    assert!(ScriptedHuman::new(empty, onto.clone(), 0.0, 1).is_err());
    let object = onto.objects[0].name.clone();
    assert!(ScriptedHuman::new(HumanScript::Akinator { object }, onto, 1.5, 1).is_err());
}

#[test]
fn step_budget_abandons_the_session() {
    let w = world();
    let onto = Arc::new(w.assets.ontology.clone());
    let object = onto.objects[0].name.clone();
    let mut human = ScriptedHuman::new(HumanScript::Akinator { object }, onto, 0.0, 3).unwrap();
    let f = common::load_fixture("akinator");
    let mut session = common::fixture_session(&f);
    session.model_ref = "sim-e".into();
    let model = w.gateway.get("sim-e").unwrap();
    let prompt = common::prompt_for(GameKind::Akinator).body;
    let out = run_simulated_session(session, &mut human, model.as_ref(), &prompt, 3).unwrap();
    assert_eq!(out.status, Status::Abandoned);
    assert!(out.outcome.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_sessions_obey_the_rules(seed in any::<u64>(), noise in 0.0f64..=1.0) {
        let w = world();
        let opts = SimOptions { sessions: 6, seed, noise, ..Default::default() };
        for s in run(&w, &opts) {
            check_invariants(&s);
            prop_assert_eq!(&s.inference_params, &InferenceParams { seed: s.inference_params.seed, ..w.cfg.params.clone() });
        }
    }
}
