use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gamearena::config::{ArenaConfig, ConfigError};
use gamearena::driver::DriveError;
use gamearena::fixtures::{FixtureError, FixtureSet};
use gamearena::gateway::{Gateway, GatewayError};
use gamearena::report::{self, metric_records, render_subsets, render_text, ReportError};
use gamearena::service::{self, AppState};
use gamearena::sim::{self, ontology_classifier, SimAssets, SimEnv, SimError, SimOptions};
use gamearena::store::{Completeness, CorpusFilter, Store, StoreError};
use gamearena_core::metrics::{FirstCorrectRule, MetricsError};
use gamearena_core::ranking::{correlate, CorrelationOptions, PermutationMode, Ranking, RankingError, RboVariant, TauVariance};
use gamearena_core::{GameError, GameKind};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(name = "gamearena", version, about = "Game-based evaluation of chat models")]
struct Cli {
    /// TOML registry and settings; defaults to the five simulated models.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Data directory, overriding the configured one.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a corpus with scripted players.
    Simulate(SimulateArgs),
    /// Run retrospective replay on finished sessions without traces.
    Retro(FilterArgs),
    /// Outcome and procedural metrics over the stored corpus.
    Metrics(MetricsArgs),
    /// Rankings from the stored corpus or a fixture set.
    Rank(RankArgs),
    /// Kendall tau, RBO and significance tests for two rankings.
    Correlate(CorrelateArgs),
    /// Write a corpus snapshot to a bundle file.
    Export(ExportArgs),
    /// Merge a bundle into the store.
    Import { bundle: PathBuf },
    /// Digest of every stored file.
    Digest,
    /// Outcome metrics on two tagged subsets.
    CompareSubsets { tag_a: String, tag_b: String },
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    n: usize,
    /// Comma-separated games; all three by default.
    #[arg(long, value_delimiter = ',')]
    games: Vec<GameKind>,
    /// Chance that an Akinator answer is softened to "Probably".
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Tags assigned round-robin, e.g. `set1,set2`.
    #[arg(long, value_delimiter = ',')]
    subsets: Vec<String>,
    /// Also run retrospective replay on the new sessions.
    #[arg(long)]
    retro: bool,
}

#[derive(Args, Debug, Default, Clone)]
struct FilterArgs {
    #[arg(long)]
    game: Option<GameKind>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long)]
    subset: Option<String>,
    /// Only sessions with recorded feedback.
    #[arg(long)]
    complete: bool,
}

impl FilterArgs {
    fn filter(&self) -> CorpusFilter {
        CorpusFilter {
            game: self.game,
            model: self.model.clone(),
            prompt: self.prompt.clone(),
            subset_tag: self.subset.clone(),
            completeness: self.complete.then_some(Completeness::CompleteWithFeedback),
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FirstCorrect {
    Strict,
    SameSide,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_enum, default_value_t = FirstCorrect::Strict)]
    first_correct: FirstCorrect,
}

#[derive(Args, Debug)]
struct RankArgs {
    /// Print a shipped fixture set (`reference`) instead of the corpus rankings.
    #[arg(long)]
    fixtures: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct CorrelateArgs {
    /// Fixture key or ranking JSON file.
    left: String,
    right: String,
    #[arg(long, default_value = "reference")]
    fixtures: String,
    /// Seed of the sampled permutation test.
    #[arg(long, required_unless_present = "exhaustive")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    iterations: u32,
    /// Enumerate every permutation instead of sampling.
    #[arg(long, conflicts_with = "seed")]
    exhaustive: bool,
    #[arg(long, default_value_t = 0.9)]
    persistence: f64,
    #[arg(long)]
    truncated: bool,
    /// Use the null-distribution variance 2(2n+5)/(9n(n-1)) for the Z test.
    #[arg(long)]
    null_variance: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
}

fn load_config(cli: &Cli) -> Result<ArenaConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ArenaConfig::load(p)?,
        None => ArenaConfig::simulation(),
    };
    if let Some(d) = &cli.data {
        cfg.data_dir = d.clone();
    }
    Ok(cfg)
}

fn open_store(cfg: &ArenaConfig) -> Result<Store> {
    Ok(Store::open(&cfg.data_dir)?)
}

fn gateway(cfg: &ArenaConfig, assets: &Arc<SimAssets>) -> Result<Gateway> {
    Ok(Gateway::from_config(cfg, assets.clone())?)
}

fn load_ranking(spec: &str, fixtures: &FixtureSet) -> Result<Ranking> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let r: Ranking = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        r.validate()?;
        return Ok(r);
    }
    Ok(fixtures.ranking(spec)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let assets = Arc::new(SimAssets::builtin());
    match cli.command {
        Command::Simulate(a) => {
            let store = open_store(&cfg)?;
            let gw = gateway(&cfg, &assets)?;
            let models = cfg.model_refs();
            let prompts = cfg.prompt_pool()?;
            let env = SimEnv { models: &models, prompts: &prompts, gateway: &gw, assets: &assets, params: &cfg.params };
            let opts = SimOptions {
                sessions: a.n,
                seed: a.seed,
                games: if a.games.is_empty() { GameKind::ALL.to_vec() } else { a.games },
                noise: a.noise,
                subsets: a.subsets,
                ..Default::default()
            };
            let n = sim::simulate_into(&store, &env, &opts)?;
            println!("simulated {n} sessions into {}", cfg.data_dir.display());
            if a.retro {
                let (done, failed) = sim::retro_corpus(&store, &gw, &prompts, &CorpusFilter::default())?;
                println!("replayed {done} sessions ({failed} failed points)");
            }
            println!("digest {}", store.digest()?);
        }
        Command::Retro(f) => {
            let store = open_store(&cfg)?;
            let gw = gateway(&cfg, &assets)?;
            let prompts = cfg.prompt_pool()?;
            let (done, failed) = sim::retro_corpus(&store, &gw, &prompts, &f.filter())?;
            println!("replayed {done} sessions ({failed} failed points)");
        }
        Command::Metrics(a) => {
            let store = open_store(&cfg)?;
            let records = store.load(&a.filter.filter())?;
            let traces = store.load_traces()?;
            let mut classify = ontology_classifier(&assets.ontology);
            let rule = match a.first_correct {
                FirstCorrect::Strict => FirstCorrectRule::Strict,
                FirstCorrect::SameSide => FirstCorrectRule::SameSide,
            };
            let bundle = report::compute(&records, &traces, Some(&mut classify), rule)?;
            store.write_report("metrics", &serde_json::to_value(&bundle)?)?;
            store.write_report("metric_records", &serde_json::to_value(metric_records(&bundle))?)?;
            match a.format {
                Format::Text => print!("{}", render_text(&bundle)),
                Format::Json => println!("{}", serde_json::to_string_pretty(&bundle)?),
            }
        }
        Command::Rank(a) => {
            let rankings: Vec<Ranking> = match &a.fixtures {
                Some(name) => FixtureSet::by_name(name)?.all().into_iter().map(|(_, r)| r).collect(),
                None => {
                    let store = open_store(&cfg)?;
                    let records = store.load(&CorpusFilter::default())?;
                    let traces = store.load_traces()?;
                    let mut classify = ontology_classifier(&assets.ontology);
                    let bundle = report::compute(&records, &traces, Some(&mut classify), FirstCorrectRule::Strict)?;
                    store.write_report("rankings", &serde_json::to_value(&bundle.rankings)?)?;
                    bundle.rankings
                }
            };
            match a.format {
                Format::Text => {
                    for r in &rankings {
                        println!("{:<22} {}", r.source, r.models.join(" > "));
                    }
                }
                Format::Json => println!("{}", serde_json::to_string_pretty(&rankings)?),
            }
        }
        Command::Correlate(a) => {
            let fixtures = FixtureSet::by_name(&a.fixtures)?;
            let left = load_ranking(&a.left, &fixtures)?;
            let right = load_ranking(&a.right, &fixtures)?;
            let common: Vec<String> = left.models.iter().filter(|m| right.position(m).is_some()).cloned().collect();
            let (l, r) = (left.restrict_to(&common), right.restrict_to(&common));
            let opts = CorrelationOptions {
                persistence: a.persistence,
                rbo_variant: if a.truncated { RboVariant::Truncated } else { RboVariant::Conjoint },
                tau_variance: if a.null_variance { TauVariance::Null } else { TauVariance::Simple },
                permutation: match a.seed {
                    Some(seed) if !a.exhaustive => PermutationMode::Sampled { iterations: a.iterations, seed },
                    _ => PermutationMode::Exhaustive,
                },
            };
            let res = correlate(&l, &r, &opts)?;
            match a.format {
                Format::Text => {
                    println!("{} vs {} (n = {})", res.left, res.right, res.n);
                    println!("kendall tau   {:.4}", res.tau);
                    println!("z score       {:.4}  p = {:.4}", res.z_score, res.tau_p_value);
                    println!("rbo (p={})   {:.4}  p = {:.4}", res.persistence, res.rbo, res.rbo_p_value);
                }
                Format::Json => println!("{}", serde_json::to_string_pretty(&res)?),
            }
        }
        Command::Export(a) => {
            let store = open_store(&cfg)?;
            let digest = store.export(&a.filter.filter(), &a.out)?;
            println!("wrote {} ({digest})", a.out.display());
        }
        Command::Import { bundle } => {
            let store = open_store(&cfg)?;
            let (imported, skipped) = store.import(&bundle)?;
            println!("imported {imported} records, skipped {skipped}");
        }
        Command::Digest => {
            println!("{}", open_store(&cfg)?.digest()?);
        }
        Command::CompareSubsets { tag_a, tag_b } => {
            let store = open_store(&cfg)?;
            let records = store.load(&CorpusFilter::default())?;
            let pairs = report::subset_comparison(&records, &tag_a, &tag_b)?;
            store.write_report("subsets", &serde_json::to_value(&pairs)?)?;
            print!("{}", render_subsets(&pairs, &tag_a, &tag_b));
        }
        Command::Serve { bind } => {
            let addr: SocketAddr = match bind {
                Some(a) => a,
                None => cfg.bind.parse().map_err(|_| ConfigError::Invalid(format!("bad bind address `{}`", cfg.bind)))?,
            };
            let store = open_store(&cfg)?;
            let gw = gateway(&cfg, &assets)?;
            let state = Arc::new(AppState::new(&cfg, gw, store, service::system_now())?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(state, addr))?;
        }
    }
    Ok(())
}

/// 1 validation, 2 I/O, 3 remote model.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(g) = cause.downcast_ref::<GatewayError>() {
            return match g {
                GatewayError::Script(_) | GatewayError::UnknownModel(_) | GatewayError::InvalidRequest(_) => 1,
                _ => 3,
            };
        }
        if let Some(s) = cause.downcast_ref::<StoreError>() {
            return match s {
                StoreError::Duplicate(_) | StoreError::Invalid(_) => 1,
                _ => 2,
            };
        }
        if let Some(c) = cause.downcast_ref::<ConfigError>() {
            return if matches!(c, ConfigError::Io { .. }) { 2 } else { 1 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        match cause.downcast_ref::<SimError>() {
            Some(SimError::Drive(DriveError::Gateway(_)) | SimError::Gateway(_)) => return 3,
            Some(SimError::Store(StoreError::Io { .. } | StoreError::Corrupt { .. } | StoreError::SchemaVersion { .. })) => {
                return 2
            }
            _ => {}
        }
        if cause.is::<SimError>()
            || cause.is::<ReportError>()
            || cause.is::<FixtureError>()
            || cause.is::<RankingError>()
            || cause.is::<MetricsError>()
            || cause.is::<GameError>()
        {
            return 1;
        }
    }
    1
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
