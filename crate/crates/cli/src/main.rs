//! `ideagraph`: build keyword networks from paper metadata and run ideation
//! over them.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, JsonError};

#[derive(Debug, Parser)]
#[command(
    name = "ideagraph",
    version,
    about = "Keyword-network ideation toolkit"
)]
struct Cli {
    /// Print errors to standard error as one JSON object.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

/// Where model replies come from. Without a script the remote endpoint is
/// read from `IDEATION_BASE_URL`, `IDEATION_MODEL` and `IDEATION_API_KEY`;
/// the critic uses the `IDEATION_CRITIC_` variables when set.
#[derive(Debug, Args, Clone, Default)]
pub struct ProviderArgs {
    /// Replay canned replies from a JSON script instead of calling a model.
    #[arg(long)]
    pub mock_script: Option<PathBuf>,
    /// Separate script for the critic (defaults to the main provider).
    #[arg(long)]
    pub critic_script: Option<PathBuf>,
    /// Directory of `<template>.txt` files overriding the built-in prompts.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build or extend a network snapshot from a corpus file.
    Ingest(commands::IngestArgs),
    /// Pre-compute relation texts for network edges.
    Relate(commands::RelateArgs),
    /// Query a network snapshot.
    Graph {
        #[command(subcommand)]
        query: commands::GraphQuery,
    },
    /// Run the ideation workflow from seed keywords.
    Ideate(commands::IdeateArgs),
    /// Score an idea proposal with the critic.
    Review(commands::ReviewArgs),
    /// Render a run record as markdown.
    Export(commands::ExportArgs),
    /// Write a seeded synthetic corpus.
    GenToyCorpus(commands::ToyArgs),
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Ingest(a) => commands::ingest(a),
        Command::Relate(a) => commands::relate(a),
        Command::Graph { query } => commands::graph(query),
        Command::Ideate(a) => commands::ideate(a),
        Command::Review(a) => commands::review(a),
        Command::Export(a) => commands::export(a),
        Command::GenToyCorpus(a) => commands::gen_toy_corpus(a),
    }
}

fn report(err: &CliError, json: bool) {
    if json {
        let e = JsonError {
            error: err.kind(),
            message: err.to_string(),
        };
        eprintln!("{}", serde_json::to_string(&e).expect("error serializes"));
    } else {
        eprintln!("error: {err}");
    }
}

fn main() -> ExitCode {
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if json_errors => {
            report(
                &CliError::Usage(e.render().to_string().trim().to_string()),
                true,
            );
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, cli.json_errors);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
