//! Label extraction from generated text.
//!
//! A generated sequence is reasoning followed by the predicted label
//! word, so extraction scans maximal alphabetic runs and takes the
//! *last* run that equals one of the six label words (case-insensitive).
//! Label words mentioned mid-reasoning never win over the final answer,
//! and near misses like "joyful" or "enjoy" are single runs that match
//! nothing.

use crate::corpus::EmotionLabel;

/// Outcome of scanning one generated sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionResult {
    /// A label word was found; `span` is the rightmost occurrence as
    /// half-open character offsets into the input.
    Found {
        label: EmotionLabel,
        span: (usize, usize),
    },
    NotFound,
}

impl ExtractionResult {
    pub fn label(&self) -> Option<EmotionLabel> {
        match self {
            ExtractionResult::Found { label, .. } => Some(*label),
            ExtractionResult::NotFound => None,
        }
    }

    pub fn span(&self) -> Option<(usize, usize)> {
        match self {
            ExtractionResult::Found { span, .. } => Some(*span),
            ExtractionResult::NotFound => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, ExtractionResult::Found { .. })
    }
}

/// Find the predicted label in `text`.
///
/// Tokenizes on maximal alphabetic runs (digits, punctuation, and
/// whitespace are separators) and returns the last run that equals a
/// label word, compared case-insensitively.
pub fn extract_label(text: &str) -> ExtractionResult {
    let mut best: Option<(EmotionLabel, (usize, usize))> = None;
    let mut run = String::new();
    let mut run_start = 0usize;

    // The trailing NUL sentinel is a non-alphabetic char that flushes the
    // final run; it is never part of the input.
    for (pos, ch) in text.chars().chain(std::iter::once('\0')).enumerate() {
        if ch.is_alphabetic() {
            if run.is_empty() {
                run_start = pos;
            }
            run.push(ch.to_ascii_lowercase());
        } else if !run.is_empty() {
            if let Some(label) = EmotionLabel::parse(&run) {
                best = Some((label, (run_start, pos)));
            }
            run.clear();
        }
    }

    match best {
        Some((label, span)) => ExtractionResult::Found { label, span },
        None => ExtractionResult::NotFound,
    }
}
