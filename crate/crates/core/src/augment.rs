//! Offline dataset augmentation.
//!
//! For every training example, ask the backend for a reasoning via the
//! shared question/answer prompt, then emit two parallel chat records:
//! one whose target is `{reasoning} {label}` and one whose target is
//! the label alone. The two datasets stay index-aligned; examples whose
//! generation fails are dropped from both and reported.
//!
//! Long runs are resumable: results are appended to a journal file and
//! flushed on a fixed cadence, and a rerun reuses journaled reasonings
//! instead of repeating backend calls.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use futures::stream::StreamExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TextExample;
use crate::genbackend::{FinishReason, GenRequest, Generator};
use crate::prompting::{
    augmentation_prompt, build_target, downstream_messages, normalize_reasoning, ChatRecord,
    PromptError, TargetVariant,
};

pub use crate::genbackend::DecodingOptions;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("every request in the first batch of {batch} failed; backend looks misconfigured")]
    FirstBatchFailed { batch: usize },
    #[error("prompt construction failed: {0}")]
    Prompt(#[from] PromptError),
    #[error("malformed journal entry at line {line}: {message}")]
    MalformedJournal { line: u64, message: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Both training records produced for one example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedPair {
    pub example_id: u64,
    pub reasoning: String,
    pub record_ra: ChatRecord,
    pub record_a: ChatRecord,
}

/// Result of augmenting a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AugmentOutcome {
    pub pairs: Vec<AugmentedPair>,
    /// (example id, failure description) for dropped examples, in input order.
    pub failures: Vec<(u64, String)>,
}

impl AugmentOutcome {
    pub fn ra_records(&self) -> Vec<ChatRecord> {
        self.pairs.iter().map(|p| p.record_ra.clone()).collect()
    }

    pub fn a_records(&self) -> Vec<ChatRecord> {
        self.pairs.iter().map(|p| p.record_a.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct AugmentOptions {
    pub decoding: DecodingOptions,
    pub max_in_flight: usize,
    /// Journal flush cadence, in processed examples.
    pub checkpoint_every: usize,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions {
            decoding: DecodingOptions::default(),
            max_in_flight: 4,
            checkpoint_every: 500,
        }
    }
}

/// One journaled generation result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Append-only JSONL journal of per-example generation results.
///
/// Reopening a journal replays its entries so a rerun can skip already
/// generated examples; a later entry for the same id wins.
pub struct Journal {
    path: PathBuf,
    entries: HashMap<u64, JournalEntry>,
    writer: BufWriter<File>,
    appended_since_flush: usize,
    checkpoint_every: usize,
}

impl Journal {
    pub fn open(path: impl Into<PathBuf>, checkpoint_every: usize) -> Result<Self, AugmentError> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (index, line) in reader.lines().enumerate() {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let entry: JournalEntry =
                    serde_json::from_str(trimmed).map_err(|e| AugmentError::MalformedJournal {
                        line: index as u64 + 1,
                        message: e.to_string(),
                    })?;
                entries.insert(entry.id, entry);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Journal {
            path,
            entries,
            writer: BufWriter::new(file),
            appended_since_flush: 0,
            checkpoint_every: checkpoint_every.max(1),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, id: u64) -> Option<&JournalEntry> {
        self.entries.get(&id)
    }

    fn append(&mut self, entry: JournalEntry) -> Result<(), AugmentError> {
        serde_json::to_writer(&mut self.writer, &entry)
            .map_err(|e| AugmentError::Io(std::io::Error::other(e)))?;
        self.writer.write_all(b"\n")?;
        self.entries.insert(entry.id, entry);
        self.appended_since_flush += 1;
        if self.appended_since_flush >= self.checkpoint_every {
            self.flush()?;
        }
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), AugmentError> {
        self.writer.flush()?;
        self.appended_since_flush = 0;
        Ok(())
    }
}

fn journal_result(entry: &JournalEntry) -> Result<String, String> {
    match (&entry.reasoning, &entry.error) {
        (Some(reasoning), _) => Ok(reasoning.clone()),
        (None, Some(error)) => Err(error.clone()),
        (None, None) => Err("journal entry carries neither reasoning nor error".to_string()),
    }
}

fn build_pair(example: &TextExample, reasoning: String) -> Result<AugmentedPair, AugmentError> {
    let base = downstream_messages(&example.text)?;
    let record_ra = ChatRecord {
        assistant: build_target(
            TargetVariant::ReasoningAnswer,
            Some(&reasoning),
            example.label,
        )?,
        ..base.clone()
    };
    let record_a = ChatRecord {
        assistant: build_target(TargetVariant::AnswerOnly, None, example.label)?,
        ..base
    };
    Ok(AugmentedPair {
        example_id: example.id,
        reasoning,
        record_ra,
        record_a,
    })
}

/// Augment `examples` through `generator`.
///
/// Dispatches up to `max_in_flight` concurrent requests while keeping
/// output order equal to input order. Reasonings are newline-collapsed
/// and trimmed; empty results count as failures. Aborts early only when
/// every result in the first `max_in_flight`-sized batch failed.
pub async fn augment_dataset(
    examples: &[TextExample],
    generator: &dyn Generator,
    options: &AugmentOptions,
    mut journal: Option<&mut Journal>,
) -> Result<AugmentOutcome, AugmentError> {
    if examples.is_empty() {
        return Ok(AugmentOutcome::default());
    }

    // Resolve journal hits up front so the request futures stay free of
    // journal borrows.
    let cached: Vec<Option<Result<String, String>>> = examples
        .iter()
        .map(|ex| {
            journal
                .as_deref()
                .and_then(|j| j.lookup(ex.id))
                .map(journal_result)
        })
        .collect();

    let decoding = &options.decoding;
    let mut stream = futures::stream::iter(examples.iter().zip(cached).map(
        |(example, cached)| async move {
            if let Some(result) = cached {
                return (example, result, true);
            }
            let request = match GenRequest::completion(augmentation_prompt(example), decoding) {
                Ok(request) => request,
                Err(e) => return (example, Err(e.to_string()), false),
            };
            let result = match generator.generate(&request).await {
                Ok(response) if response.finish_reason != FinishReason::Error => Ok(response.text),
                Ok(_) => Err("generation failed after retries".to_string()),
                Err(e) => Err(e.to_string()),
            };
            (example, result, false)
        },
    ))
    .buffered(options.max_in_flight.max(1));

    let first_batch = options.max_in_flight.max(1).min(examples.len());
    let mut outcome = AugmentOutcome::default();
    let mut processed = 0usize;

    while let Some((example, raw, from_journal)) = stream.next().await {
        processed += 1;
        let result = raw.and_then(|text| {
            let reasoning = normalize_reasoning(&text);
            if reasoning.is_empty() {
                Err("backend returned an empty reasoning".to_string())
            } else {
                Ok(reasoning)
            }
        });
        if !from_journal {
            if let Some(journal) = &mut journal {
                journal.append(JournalEntry {
                    id: example.id,
                    reasoning: result.as_ref().ok().cloned(),
                    error: result.as_ref().err().cloned(),
                })?;
            }
        }
        match result {
            Ok(reasoning) => outcome.pairs.push(build_pair(example, reasoning)?),
            Err(message) => outcome.failures.push((example.id, message)),
        }
        if processed == first_batch && outcome.failures.len() == processed {
            return Err(AugmentError::FirstBatchFailed { batch: first_batch });
        }
    }

    if let Some(journal) = &mut journal {
        journal.flush()?;
    }
    Ok(outcome)
}

/// Alignment diagnostics for the two emitted datasets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentReport {
    pub aligned: bool,
    /// Index and description of the first mismatch, when any.
    pub first_mismatch: Option<(usize, String)>,
}

/// Check that the two record lists are the same length, share user and
/// system fields pairwise, and that every reasoning-target ends with a
/// space followed by the matching label-only target.
pub fn verify_alignment(ra_records: &[ChatRecord], a_records: &[ChatRecord]) -> AlignmentReport {
    if ra_records.len() != a_records.len() {
        return AlignmentReport {
            aligned: false,
            first_mismatch: Some((
                ra_records.len().min(a_records.len()),
                format!(
                    "length mismatch: {} vs {}",
                    ra_records.len(),
                    a_records.len()
                ),
            )),
        };
    }
    for (index, (ra, a)) in ra_records.iter().zip(a_records).enumerate() {
        if ra.user != a.user {
            return AlignmentReport {
                aligned: false,
                first_mismatch: Some((index, "user fields differ".to_string())),
            };
        }
        if ra.system != a.system {
            return AlignmentReport {
                aligned: false,
                first_mismatch: Some((index, "system fields differ".to_string())),
            };
        }
        let expected_suffix = format!(" {}", a.assistant);
        if !ra.assistant.ends_with(&expected_suffix) {
            return AlignmentReport {
                aligned: false,
                first_mismatch: Some((
                    index,
                    "reasoning target does not end with the label target".to_string(),
                )),
            };
        }
    }
    AlignmentReport {
        aligned: true,
        first_mismatch: None,
    }
}
