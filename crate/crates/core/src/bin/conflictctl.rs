use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conflict_core::config::PipelineConfig;
use conflict_core::pipeline::{run, Command};
use conflict_core::Error;

#[derive(Parser)]
#[command(name = "conflictctl", version, about = "Verdict corpus analysis pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Pipeline configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set cluster.seed=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse the corpus, mine verdicts, and write corpus statistics.
    Ingest(Common),
    /// Sweep pruning cutoffs, cluster, and write partitions.
    Cluster(Common),
    /// Annotator agreement, label distribution, and gold labels.
    Agree(Common),
    /// Cluster-stratified train/val/test splits.
    Split(Common),
    /// Train the verdict probe.
    Train(Common),
    /// Score the probe on the test split.
    Evaluate(Common),
    /// Aspect dyad significance tests and verdict ratios.
    Analyze(Common),
}

impl Cmd {
    fn parts(&self) -> (Command, &Common) {
        match self {
            Cmd::Ingest(c) => (Command::Ingest, c),
            Cmd::Cluster(c) => (Command::Cluster, c),
            Cmd::Agree(c) => (Command::Agree, c),
            Cmd::Split(c) => (Command::Split, c),
            Cmd::Train(c) => (Command::Train, c),
            Cmd::Evaluate(c) => (Command::Evaluate, c),
            Cmd::Analyze(c) => (Command::Analyze, c),
        }
    }
}

fn error_line(command: Command, e: &Error) -> String {
    serde_json::json!({
        "error": e.kind(),
        "command": command.name(),
        "message": e.to_string().replace('\n', " "),
    })
    .to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, common) = cli.command.parts();
    let result = PipelineConfig::load(&common.config, &common.set).and_then(|c| run(command, &c));
    match result {
        Ok(summary) => {
            for name in &summary.outputs {
                println!("{}", summary.dir.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(command, &e));
            ExitCode::FAILURE
        }
    }
}
