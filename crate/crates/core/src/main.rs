use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entity_rank::kbfeatures::CountMode;
use entity_rank::pipeline::{self, PipelineConfig, Stage};

#[derive(Parser)]
#[command(name = "entity-rank", version, about = "Rank knowledge-base entities by importance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse input files into canonical stores
    Ingest(Opts),
    /// Compute link, triple and social features
    Features(Opts),
    /// Split labels and fit feature weights
    Train(Opts),
    /// Score the held-out split
    Eval(Opts),
    /// Write one ranked list per language
    Rank(Opts),
    /// Entity-type distribution of the ranked head
    Report(Opts),
    /// Run every stage in order
    Run(Opts),
}

#[derive(Args)]
struct Opts {
    /// `key = value` config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    pages: Option<PathBuf>,
    #[arg(long)]
    links: Option<PathBuf>,
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(long)]
    triples: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    social_scores: Option<PathBuf>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    pagerank_tol: Option<f64>,
    #[arg(long)]
    pagerank_max_iters: Option<usize>,
    #[arg(long, alias = "seed")]
    split_seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long, alias = "threshold")]
    positive_threshold: Option<u8>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long, short = 'o', alias = "out")]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    type_predicate: Option<String>,
    #[arg(long)]
    social_predicate: Option<String>,
    #[arg(long)]
    count_mode: Option<CountMode>,
}

impl Opts {
    fn into_config(self) -> Result<PipelineConfig, pipeline::ConfigError> {
        let mut c = PipelineConfig::default();
        if let Some(path) = &self.config {
            c.apply_file(path)?;
        }
        macro_rules! over {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v.into(); })*
            };
        }
        over!(
            damping,
            pagerank_tol,
            pagerank_max_iters,
            split_seed,
            train_fraction,
            positive_threshold,
            top_n,
            output_dir,
            type_predicate,
            social_predicate,
            count_mode
        );
        macro_rules! path {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = Some(v); })*
            };
        }
        path!(pages, links, categories, triples, labels, social_scores);
        Ok(c)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (stage, opts) = match cli.command {
        Command::Ingest(o) => (Some(Stage::Ingest), o),
        Command::Features(o) => (Some(Stage::Features), o),
        Command::Train(o) => (Some(Stage::Train), o),
        Command::Eval(o) => (Some(Stage::Eval), o),
        Command::Rank(o) => (Some(Stage::Rank), o),
        Command::Report(o) => (Some(Stage::Report), o),
        Command::Run(o) => (None, o),
    };
    let result = opts.into_config().map_err(pipeline::PipelineError::from).and_then(|config| match stage {
        Some(s) => pipeline::run_stage(s, &config),
        None => pipeline::run_all(&config),
    });
    match result {
        Ok(summary) => {
            for path in &summary.outputs {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
