//! Founder–idea fit evaluation: ingest founder and company records, retrieve
//! similar historical cases by embedding similarity, run a multi-expert LLM
//! panel over the retrieved cases, and aggregate the panel's scores into one
//! number.
//!
//! The crate is organized as a pipeline:
//!
//! * [`ingest`] — CSV parsing and normalization into [`records`] types.
//! * [`embed`] — embedding providers (remote HTTP or deterministic hashing),
//!   cosine similarity, and a file-backed embedding cache.
//! * [`index`] — an in-memory similarity index over embedded founders and
//!   ideas, with a binary on-disk format.
//! * [`llm`] — chat backends (remote, scripted, replay) behind a retrying
//!   gateway that can record sessions for later replay.
//! * [`pipeline`] — prompt templates, transcript parsers, and the evaluation
//!   driver itself.
//! * [`scoring`] — the aggregation formula and its edge-case rules.
//! * [`report`] — the JSON/markdown evaluation report.
//! * [`config`] — TOML run configuration shared by the CLI.

pub mod config;
pub mod embed;
pub mod index;
pub mod ingest;
pub mod llm;
pub mod pipeline;
pub mod records;
pub mod report;
pub mod scoring;

pub use config::{ConfigError, LlmSettings, OutputFormat, PipelineConfig};
pub use embed::{cosine_similarity, EmbedError, EmbeddingConfig, EmbeddingVector};
pub use index::{IndexError, NeighborSelection, ScoredMatch, SimilarityIndex};
pub use ingest::{IngestError, MappingConfig};
pub use llm::{ChatBackend, Gateway, LlmError, StageTag};
pub use pipeline::{
    run_evaluation, EvaluationRequest, EvaluationRun, FitMode, PipelineError, PipelineOptions,
    Strategy,
};
pub use records::{FounderProfile, FounderRecord, IdeaRecord, Outcome};
pub use report::{EvaluationReport, ReportError, REPORT_SCHEMA_VERSION};
pub use scoring::{aggregate, EvaluationScores, ScoreError};
