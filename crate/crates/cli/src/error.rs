use std::path::PathBuf;

use ideagraph::corpus::toy::ToyCorpusError;
use ideagraph::corpus::CorpusError;
use ideagraph::critic::CriticError;
use ideagraph::llm::{LlmError, TemplateError};
use ideagraph::network::{NetworkError, SnapshotError};
use ideagraph::proposal::ProposalError;
use ideagraph::workflow::{RunRecordError, WorkflowError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("snapshot {path} does not exist")]
    MissingSnapshot { path: PathBuf },
    #[error("snapshot {path}: {source}")]
    Snapshot {
        path: PathBuf,
        #[source]
        source: SnapshotError,
    },
    #[error("config file {path}: {message}")]
    ConfigFile { path: PathBuf, message: String },
    #[error("no model configured: pass --mock-script or set {prefix}_BASE_URL and {prefix}_MODEL")]
    NoProvider { prefix: &'static str },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Toy(#[from] ToyCorpusError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Critic(#[from] CriticError),
    #[error("idea file {path}: {source}")]
    Proposal {
        path: PathBuf,
        #[source]
        source: ProposalError,
    },
    #[error("run record {path}: {source}")]
    RunRecord {
        path: PathBuf,
        #[source]
        source: RunRecordError,
    },
    #[error("run aborted: {0}")]
    RunAborted(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::MissingSnapshot { .. } => "missing_snapshot",
            CliError::Snapshot { .. } => "snapshot",
            CliError::ConfigFile { .. } => "config_file",
            CliError::NoProvider { .. } => "no_provider",
            CliError::Usage(_) => "usage",
            CliError::Corpus(_) => "corpus",
            CliError::Toy(_) => "toy_corpus",
            CliError::Network(_) => "network",
            CliError::Llm(_) => "llm",
            CliError::Template(_) => "template",
            CliError::Workflow(WorkflowError::Config(_)) => "config",
            CliError::Workflow(_) => "workflow",
            CliError::Critic(_) => "critic",
            CliError::Proposal { .. } => "proposal",
            CliError::RunRecord { .. } => "run_record",
            CliError::RunAborted(_) => "run_aborted",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Workflow(WorkflowError::Config(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Serialize)]
pub struct JsonError<'a> {
    pub error: &'a str,
    pub message: String,
}
