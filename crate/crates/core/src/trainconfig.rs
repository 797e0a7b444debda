//! Trainer-ready fine-tuning configuration emission.
//!
//! Two fixed profiles exist: `reasoning_gen` for the reasoning
//! generator and `downstream` for the generative classifiers. Both are
//! emitted as YAML-style `key: value` lines (UTF-8, LF endings) with a
//! stable key order, so identical inputs produce identical bytes. The
//! profiles differ only in warmup steps, micro batch size, effective
//! batch size, and max sequence length.

use std::io::Write;

/// Derived from gradient accumulation x micro batch x 1 device, so it
/// is rendered as a comment rather than a trainer key.
const EFFECTIVE_BATCH_KEY: &str = "effective_batch_size";
const PAD_TOKEN_KEY: &str = "special_tokens.pad_token";

/// Which fine-tuning run a profile describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    ReasoningGen,
    Downstream,
}

impl ProfileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::ReasoningGen => "reasoning_gen",
            ProfileKind::Downstream => "downstream",
        }
    }

    /// Accepts `reasoning-gen`/`reasoning_gen` and `downstream`.
    pub fn parse(value: &str) -> Option<ProfileKind> {
        match value.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "reasoning_gen" => Some(ProfileKind::ReasoningGen),
            "downstream" => Some(ProfileKind::Downstream),
            _ => None,
        }
    }
}

/// An ordered set of hyperparameter key/value pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainProfile {
    pub name: ProfileKind,
    settings: Vec<(&'static str, String)>,
}

fn base_settings(
    warmup_steps: u32,
    micro_batch_size: u32,
    effective_batch_size: u32,
    sequence_len: u32,
) -> Vec<(&'static str, String)> {
    vec![
        ("base_model", "Llama-3.2-1B-Instruct".into()),
        ("training_framework", "Axolotl".into()),
        ("gpu", "NVIDIA A40".into()),
        ("learning_rate", "2e-5".into()),
        ("optimizer", "paged_adamw_8bit".into()),
        ("lr_scheduler", "cosine".into()),
        ("warmup_steps", warmup_steps.to_string()),
        ("weight_decay", "0.0".into()),
        ("gradient_accumulation_steps", "8".into()),
        ("micro_batch_size", micro_batch_size.to_string()),
        (EFFECTIVE_BATCH_KEY, effective_batch_size.to_string()),
        ("num_epochs", "1".into()),
        ("sequence_len", sequence_len.to_string()),
        ("sample_packing", "true".into()),
        ("pad_to_sequence_len", "true".into()),
        ("bf16", "auto".into()),
        ("tf32", "false".into()),
        ("gradient_checkpointing", "true".into()),
        ("gradient_checkpointing_use_reentrant", "false".into()),
        ("logging_steps", "1".into()),
        ("flash_attention", "true".into()),
        ("evals_per_epoch", "2".into()),
        ("saves_per_epoch", "1".into()),
        (PAD_TOKEN_KEY, "<|end_of_text|>".into()),
    ]
}

impl TrainProfile {
    /// Hyperparameters for fine-tuning the reasoning generator.
    pub fn reasoning_gen() -> Self {
        TrainProfile {
            name: ProfileKind::ReasoningGen,
            settings: base_settings(100, 1, 8, 16384),
        }
    }

    /// Hyperparameters for fine-tuning the downstream classifiers.
    pub fn downstream() -> Self {
        TrainProfile {
            name: ProfileKind::Downstream,
            settings: base_settings(10, 2, 16, 8192),
        }
    }

    pub fn for_kind(kind: ProfileKind) -> Self {
        match kind {
            ProfileKind::ReasoningGen => Self::reasoning_gen(),
            ProfileKind::Downstream => Self::downstream(),
        }
    }

    pub fn settings(&self) -> &[(&'static str, String)] {
        &self.settings
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.settings
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Keys whose values differ between two profiles (the key sets are
    /// identical by construction).
    pub fn differing_keys(&self, other: &TrainProfile) -> Vec<&'static str> {
        self.settings
            .iter()
            .filter(|(key, value)| other.value(key) != Some(value.as_str()))
            .map(|(key, _)| *key)
            .collect()
    }
}

/// Write a profile as a YAML-style config including the dataset path.
/// Emission is byte-deterministic. Returns the number of bytes written.
pub fn emit_config(
    profile: &TrainProfile,
    dataset_path: &str,
    mut writer: impl Write,
) -> Result<usize, std::io::Error> {
    let mut out = String::new();
    out.push_str(&format!(
        "# trainer config profile: {}\n",
        profile.name.as_str()
    ));
    out.push_str(&format!("dataset_path: {dataset_path}\n"));
    for (key, value) in &profile.settings {
        match *key {
            EFFECTIVE_BATCH_KEY => {
                out.push_str(&format!(
                    "# {EFFECTIVE_BATCH_KEY}: {value}  (gradient_accumulation_steps x micro_batch_size x 1 device)\n"
                ));
            }
            PAD_TOKEN_KEY => {
                out.push_str("special_tokens:\n");
                out.push_str(&format!("  pad_token: {value}\n"));
            }
            _ => out.push_str(&format!("{key}: {value}\n")),
        }
    }
    writer.write_all(out.as_bytes())?;
    Ok(out.len())
}
