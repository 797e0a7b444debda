//! Prompt templates and training-target construction.
//!
//! Both pipeline stages share one completion template so that the
//! distribution the reasoning generator was trained on is exactly the
//! distribution it sees at augmentation time:
//!
//! ```text
//! Question: {question} Answer: {answer} Reasoning:
//! ```
//!
//! Downstream classifier records use a chat shape with a fixed system
//! message and the raw input text as the user message.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EmotionLabel, TextExample};

/// System message for the downstream generative classifiers.
pub const DOWNSTREAM_SYSTEM: &str = "Find the emotion in the text.";

/// System message for the zero-shot baseline harness. The instruction
/// enumerates the label vocabulary so an unadapted model can answer in
/// scoreable form.
pub const ZERO_SHOT_SYSTEM: &str = "Find the emotion in the text. Answer with exactly one word \
from: sadness, joy, love, anger, fear, surprise.";

const QUESTION_PREFIX: &str = "Question: ";
const ANSWER_INFIX: &str = " Answer: ";
const REASONING_SUFFIX: &str = " Reasoning: ";

/// A (system, user, assistant-target) record. The assistant field holds
/// the training target and is empty at inference time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRecord {
    pub system: String,
    pub user: String,
    pub assistant: String,
}

/// Which training target a downstream record carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetVariant {
    /// Reasoning, a single space, then the label word.
    ReasoningAnswer,
    /// The label word alone.
    AnswerOnly,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("question must be non-empty")]
    EmptyQuestion,
    #[error("answer must be non-empty")]
    EmptyAnswer,
    #[error("text must be non-empty")]
    EmptyText,
    #[error("reasoning-answer target requires a non-empty reasoning")]
    MissingReasoning,
}

fn question_answer_prompt(question: &str, answer: &str) -> String {
    let mut out = String::with_capacity(
        QUESTION_PREFIX.len()
            + question.len()
            + ANSWER_INFIX.len()
            + answer.len()
            + REASONING_SUFFIX.len(),
    );
    out.push_str(QUESTION_PREFIX);
    out.push_str(question);
    out.push_str(ANSWER_INFIX);
    out.push_str(answer);
    out.push_str(REASONING_SUFFIX);
    out
}

/// Stage-1 completion prompt: `Question: {q} Answer: {a} Reasoning: `
/// (single ASCII spaces, trailing space included).
pub fn stage1_prompt(question: &str, answer: &str) -> Result<String, PromptError> {
    if question.is_empty() {
        return Err(PromptError::EmptyQuestion);
    }
    if answer.is_empty() {
        return Err(PromptError::EmptyAnswer);
    }
    Ok(question_answer_prompt(question, answer))
}

/// Augmentation prompt for a labeled example: the stage-1 template with
/// the example text as the question and the canonical label word as the
/// answer.
pub fn augmentation_prompt(example: &TextExample) -> String {
    question_answer_prompt(&example.text, example.label.as_str())
}

/// Chat-shaped inference record for the downstream classifiers: fixed
/// system message, verbatim user text, empty assistant.
pub fn downstream_messages(text: &str) -> Result<ChatRecord, PromptError> {
    if text.is_empty() {
        return Err(PromptError::EmptyText);
    }
    Ok(ChatRecord {
        system: DOWNSTREAM_SYSTEM.to_string(),
        user: text.to_string(),
        assistant: String::new(),
    })
}

/// Chat-shaped inference record for the zero-shot baseline.
pub fn zeroshot_messages(text: &str) -> Result<ChatRecord, PromptError> {
    if text.is_empty() {
        return Err(PromptError::EmptyText);
    }
    Ok(ChatRecord {
        system: ZERO_SHOT_SYSTEM.to_string(),
        user: text.to_string(),
        assistant: String::new(),
    })
}

/// Build a training target.
///
/// `ReasoningAnswer` yields `{reasoning} {label}` (one ASCII space);
/// `AnswerOnly` yields the label word and ignores `reasoning`.
pub fn build_target(
    variant: TargetVariant,
    reasoning: Option<&str>,
    label: EmotionLabel,
) -> Result<String, PromptError> {
    match variant {
        TargetVariant::ReasoningAnswer => {
            let reasoning = reasoning.unwrap_or("");
            if reasoning.is_empty() {
                return Err(PromptError::MissingReasoning);
            }
            Ok(format!("{reasoning} {}", label.as_str()))
        }
        TargetVariant::AnswerOnly => Ok(label.as_str().to_string()),
    }
}

/// Collapse newlines so a generated reasoning fits a one-line record:
/// every maximal whitespace run containing a CR or LF becomes a single
/// space, surrounding whitespace is trimmed, and interior whitespace
/// without newlines is kept verbatim.
pub fn normalize_reasoning(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut run = String::new();
    for ch in raw.chars() {
        if ch.is_whitespace() {
            run.push(ch);
        } else {
            if !run.is_empty() {
                if !out.is_empty() {
                    if run.contains(['\n', '\r']) {
                        out.push(' ');
                    } else {
                        out.push_str(&run);
                    }
                }
                run.clear();
            }
            out.push(ch);
        }
    }
    out
}
