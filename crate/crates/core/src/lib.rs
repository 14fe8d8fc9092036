//! Keyword co-occurrence networks and a critic-guided ideation workflow.
//!
//! Papers are ingested into a [`SciNetwork`] whose edges record keyword
//! co-occurrence. The [`workflow`] module then grows a seed keyword set over
//! that network one neighbor at a time, asking a chat model to write an
//! [`IdeaProposal`] each round and a critic to score it, and keeps the whole
//! history in an [`IdeaStack`].

pub mod corpus;
pub mod critic;
pub mod llm;
pub mod network;
pub mod proposal;
pub mod workflow;

pub use corpus::{Category, Keyword, PaperRecord};
pub use critic::{evaluate_idea, Review};
pub use llm::{Gateway, ScriptedProvider};
pub use network::{GraphFeatures, SciNetwork};
pub use proposal::IdeaProposal;
pub use workflow::{run, IdeaStack, RoundRecord, RunOutcome, WorkflowConfig};
