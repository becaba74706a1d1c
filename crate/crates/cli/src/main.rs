mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "attrib", version, about = "Evidence attribution for diagnostic teacher dialogues")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Attribute a target response to a teacher sentence of a dialogue.
    Attribute(AttributeArgs),
    /// Score attribution methods on a benchmark corpus.
    Evaluate(EvaluateArgs),
    /// Write a synthetic planted-evidence corpus.
    Generate(GenerateArgs),
    /// Cohen's kappa between two annotation files.
    Kappa(KappaArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScorerChoice {
    Lexical,
    Remote,
}

#[derive(Debug, Args)]
struct ScorerArgs {
    #[arg(long, value_enum, default_value = "lexical")]
    scorer: ScorerChoice,
    /// Completions server base URL (remote scorer).
    #[arg(long, required_if_eq("scorer", "remote"))]
    endpoint: Option<String>,
    /// Model name sent to the completions server (remote scorer).
    #[arg(long, required_if_eq("scorer", "remote"))]
    model: Option<String>,
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    /// Persistent score cache file.
    #[arg(long, env = "ATTRIB_CACHE")]
    cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttributeArgs {
    #[arg(long)]
    dialogue: PathBuf,
    #[arg(long)]
    target: String,
    #[arg(long, default_value = "hierarchical")]
    method: String,
    #[command(flatten)]
    scorer: ScorerArgs,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "hierarchical", conflicts_with = "all_methods")]
    method: String,
    /// Evaluate every method, hierarchical first.
    #[arg(long)]
    all_methods: bool,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    scorer: ScorerArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    #[arg(long, default_value_t = 4)]
    turns: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Let distractor sentences leak target tokens.
    #[arg(long)]
    hard: bool,
}

#[derive(Debug, Args)]
struct KappaArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// TOML service configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    store: Option<PathBuf>,
    /// Scripted chat replies, one per line.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] attrib_core::Error),
    #[error(transparent)]
    Service(#[from] attrib_service::ServiceError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();

    let outcome = match cli.command {
        Command::Attribute(args) => commands::attribute(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::Generate(args) => commands::generate(args),
        Command::Kappa(args) => commands::kappa(args),
        Command::Serve(args) => commands::serve(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
