//! Core library for a reasoning-infused text-classification pipeline.
//!
//! The pipeline turns a plain labeled-text dataset into two parallel
//! instruction-tuning datasets (one whose targets carry a generated
//! reasoning before the label, one with the label alone), drives an
//! OpenAI-compatible generation endpoint to produce those reasonings,
//! and scores generated predictions with a full confusion-matrix /
//! significance-test evaluation suite.
//!
//! Modules:
//! - [`corpus`]: labeled examples, reasoning triples, JSONL ingestion and
//!   emission, seeded splits, class distributions.
//! - [`prompting`]: the fixed prompt templates and training-target
//!   construction for both pipeline stages.
//! - [`genbackend`]: generation backends: an HTTP client for
//!   `/v1/completions` and `/v1/chat/completions`, plus a deterministic
//!   stub for offline runs and tests.
//! - [`augment`]: offline dataset augmentation producing the paired
//!   reasoning / no-reasoning training files, with a resumable journal.
//! - [`extract`]: pulling the predicted label out of generated text.
//! - [`metrics`]: confusion matrices, precision/recall/F1, accuracy,
//!   and the pooled two-proportion z-test.
//! - [`trainconfig`]: emission of trainer-ready fine-tuning configs.
//! - [`report`]: rendering evaluation results as tables and CSV.

pub mod augment;
pub mod corpus;
pub mod extract;
pub mod genbackend;
pub mod metrics;
pub mod prompting;
pub mod report;
pub mod trainconfig;

pub use corpus::{ClassDistribution, EmotionLabel, ReasoningTriple, TextExample};
pub use extract::{extract_label, ExtractionResult};
pub use genbackend::{BackendConfig, GenRequest, GenResponse, Generator};
pub use metrics::{ClassMetrics, ConfusionMatrix, EvalReport, SignificanceResult};
pub use prompting::{ChatRecord, TargetVariant};
