use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use evrank::corpus::{load_claims, load_corpus, write_claims};
use evrank::fixtures::{generate_fixture, write_fixture};
use evrank::pipeline::{self, Overrides, PipelineConfig, ScorerKind};
use evrank::scoring::RankSignal;
use evrank::Error;

/// Claim-to-evidence retrieval with verification feedback.
#[derive(Parser)]
#[command(name = "evrank", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Pipeline config file (flat TOML).
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// BM25 retrieval depth.
    #[arg(long)]
    k: Option<usize>,
    /// Weight of verification feedback in the fused score.
    #[arg(long)]
    alpha: Option<f64>,
    /// Sampled NEI negatives per claim.
    #[arg(long)]
    n_negatives: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Where pair scores come from: `cache` or `service`.
    #[arg(long, value_parser = parse_scorer)]
    scorer: Option<ScorerKind>,
    /// Signal the fused run is ordered by: combo, relevance or verification.
    #[arg(long, value_parser = parse_signal)]
    rank_by: Option<RankSignal>,
    /// Abort on the first malformed input line instead of skipping it.
    #[arg(long)]
    strict: bool,
}

fn parse_scorer(s: &str) -> Result<ScorerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_signal(s: &str) -> Result<RankSignal, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Build the BM25 index from the corpus.
    Index(Common),
    /// Rank the corpus for every claim with BM25.
    Retrieve(Common),
    /// Score BM25 candidates and rank them by the fused score.
    Fuse(Common),
    /// Write verifier and reranker training sets.
    BuildTrain(Common),
    /// Fit the reference reranker on the reranker training set.
    Train(Common),
    /// Rerank the fused run with the trained model or external predictions.
    Rerank {
        #[command(flatten)]
        common: Common,
        /// JSONL predictions to use instead of the trained model.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Compute recall and verification metrics for a run.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Run file to evaluate (defaults to the fused run).
        #[arg(long)]
        run: Option<PathBuf>,
        /// Metrics report path (defaults to the configured one).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run index through eval in order.
    All(Common),
    /// Write the synthetic test bundle.
    Fixture {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a gold claims file for a claim subset from a larger annotated
    /// claims file, keeping only evidence found in the corpus.
    PrepareGold {
        #[arg(long)]
        corpus: PathBuf,
        /// Claims to keep (ids and text).
        #[arg(long)]
        claims: PathBuf,
        /// Annotated claims sharing the same ids.
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Keep claims that end up without evidence.
        #[arg(long)]
        keep_empty: bool,
    },
}

fn load_config(c: &Common) -> evrank::Result<PipelineConfig> {
    let overrides = Overrides {
        k: c.k,
        alpha: c.alpha,
        n_negatives: c.n_negatives,
        seed: c.seed,
        scorer: c.scorer,
        strict: c.strict.then_some(true),
        rank_by: c.rank_by,
    };
    match &c.config {
        Some(path) => PipelineConfig::load(path, &overrides),
        None => PipelineConfig::from_toml_str("", Path::new("."), &overrides),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Index(c) => println!("{}", pipeline::cmd_index(&load_config(&c)?)?),
        Command::Retrieve(c) => println!("{}", pipeline::cmd_retrieve(&load_config(&c)?)?),
        Command::Fuse(c) => println!("{}", pipeline::cmd_fuse(&load_config(&c)?)?),
        Command::BuildTrain(c) => println!("{}", pipeline::cmd_build_train(&load_config(&c)?)?),
        Command::Train(c) => println!("{}", pipeline::cmd_train(&load_config(&c)?)?),
        Command::Rerank {
            common,
            predictions,
        } => {
            let cfg = load_config(&common)?;
            println!("{}", pipeline::cmd_rerank(&cfg, predictions.as_deref())?);
        }
        Command::Eval { common, run, out } => {
            let cfg = load_config(&common)?;
            let (_, summary) = pipeline::cmd_eval(&cfg, run.as_deref(), out.as_deref())?;
            println!("{summary}");
        }
        Command::All(c) => {
            let cfg = load_config(&c)?;
            println!("{}", pipeline::cmd_index(&cfg)?);
            println!("{}", pipeline::cmd_retrieve(&cfg)?);
            println!("{}", pipeline::cmd_fuse(&cfg)?);
            println!("{}", pipeline::cmd_build_train(&cfg)?);
            println!("{}", pipeline::cmd_train(&cfg)?);
            println!("{}", pipeline::cmd_rerank(&cfg, None)?);
            println!("{}", pipeline::cmd_eval(&cfg, None, None)?.1);
        }
        Command::Fixture { seed, out } => {
            write_fixture(&generate_fixture(seed), &out)?;
            println!("fixture: seed {seed} -> {}", out.display());
        }
        Command::PrepareGold {
            corpus,
            claims,
            annotations,
            out,
            keep_empty,
        } => {
            let corpus = load_corpus(&corpus, true)?;
            let wanted = load_claims(&claims, false)?;
            let annotated = load_claims(&annotations, false)?;
            let gold = pipeline::prepare_gold(&corpus, &wanted, &annotated, keep_empty);
            pipeline::write_atomic(&out, |w| write_claims(&gold, w))
                .with_context(|| format!("writing {}", out.display()))?;
            let pairs: usize = gold.iter().map(|r| r.evidence.len()).sum();
            println!(
                "prepare-gold: {} of {} claims, {pairs} evidence pairs -> {}",
                gold.len(),
                wanted.len(),
                out.display()
            );
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<Error>())
        .map(|e| e.exit_code() as u8)
        .unwrap_or(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
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
