//! `repogym`: index, gen, materialize, verify, sample and analyze.
//!
//! Exit codes: 0 completed (possibly with warnings), 1 usage error, 2 data error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<repogym::Error> for CliError {
    fn from(e: repogym::Error) -> Self {
        CliError::Data(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "repogym",
    version,
    about = "Generate, materialize and verify repository-level agent tasks"
)]
struct Cli {
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads.
    #[arg(long, global = true)]
    parallelism: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Index every commit tree of a repository store into the snapshot cache.
    Index(IndexArgs),
    /// Generate task instances from cached snapshots.
    Gen(GenArgs),
    /// Create one workspace directory per instance.
    Materialize(MaterializeArgs),
    /// Verify agent patches against their instances.
    Verify(VerifyArgs),
    /// Assemble a dataset manifest from an instance file.
    Sample(SampleArgs),
    /// Summarize agent trajectory logs.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    /// Repository store, laid out as `<store>/<repo>/<commit>/`.
    #[arg(long)]
    pub repos: Option<PathBuf>,
    /// Snapshot cache directory (also `REPOGYM_CACHE`).
    #[arg(long, alias = "out")]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub repos: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Task kinds, comma separated (default: all four).
    #[arg(long = "kind")]
    pub kinds: Option<String>,
    /// Inclusive dependency-count range for dep-search, `lo:hi`.
    #[arg(long)]
    pub dep_range: Option<String>,
    /// At most this many instances per kind, lowest instance ids first.
    #[arg(long)]
    pub n: Option<usize>,
    /// Issue records for issue-localize (`repo_id`, optional `commit_id`, `problem_statement`, `patch`).
    #[arg(long)]
    pub issues: Option<PathBuf>,
    /// Test command recorded in func-gen instances.
    #[arg(long)]
    pub test_command: Option<String>,
    /// Instance file to write (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MaterializeArgs {
    #[arg(long)]
    pub repos: Option<PathBuf>,
    #[arg(long)]
    pub instances: PathBuf,
    /// Parent directory for the workspaces.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub repos: Option<PathBuf>,
    #[arg(long)]
    pub instances: PathBuf,
    /// Patch records (`instance_id`, `patch`).
    #[arg(long)]
    pub patches: PathBuf,
    /// Trajectory logs used for the non-loop rate.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    /// Line tolerance for dependency comments.
    #[arg(long)]
    pub tolerance: Option<usize>,
    /// `all` or `any` gold files for issue-localize.
    #[arg(long)]
    pub coverage: Option<String>,
    /// Seconds allowed for a func-gen test command.
    #[arg(long)]
    pub exec_timeout: Option<u64>,
    /// Scratch directory for func-gen workspaces.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
    /// Result file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub instances: PathBuf,
    /// max-diversity, min-diversity, in-domain, balanced or mix.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k_repos: Option<usize>,
    /// Comma-separated repository ids for in-domain.
    #[arg(long)]
    pub in_domain: Option<String>,
    #[arg(long)]
    pub dep_range: Option<String>,
    #[arg(long)]
    pub per_repo_cap: Option<usize>,
    /// Task fractions for mix, e.g. `func-localize=0.5,dep-search=0.5`
    /// (default: proportional to the instance file).
    #[arg(long)]
    pub mix: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Log file, or a directory of `*.jsonl` logs.
    #[arg(long)]
    pub logs: PathBuf,
    /// `text` or `records`.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let threads = config.pick(cli.parallelism, "parallelism")?.unwrap_or(0);
    if cli.parallelism == Some(0) {
        return Err(CliError::Usage("--parallelism must be at least 1".into()));
    }
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Data(e.into()))?;
    }
    match cli.command {
        Command::Index(a) => commands::index(&config, a),
        Command::Gen(a) => commands::gen(&config, a),
        Command::Materialize(a) => commands::materialize(&config, a),
        Command::Verify(a) => commands::verify(&config, a),
        Command::Sample(a) => commands::sample(&config, a),
        Command::Analyze(a) => commands::analyze(&config, a),
    }
}

fn main() -> ExitCode {
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
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
