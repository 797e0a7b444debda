//! `riclass`: reasoning-infused classification pipeline.
//!
//! Subcommands cover the full workflow: restructuring a reasoning
//! corpus for stage-1 training (`transform`), generating the paired
//! downstream training datasets (`augment`), running inference over a
//! test set (`predict`), scoring predictions (`evaluate`), comparing
//! runs with significance testing (`compare`), and emitting trainer
//! configs (`emit-config`).

mod commands;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use riclass_core::trainconfig::ProfileKind;

#[derive(Parser)]
#[command(
    name = "riclass",
    version,
    about = "Reasoning-infused classification pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Backend selection shared by the commands that call a generator.
#[derive(Args, Debug)]
pub struct BackendArgs {
    /// Use the deterministic offline stub instead of a remote endpoint.
    #[arg(long)]
    pub stub: bool,
    /// Sampling seed; also keys the stub's outputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Endpoint base URL (overrides GEN_BASE_URL).
    #[arg(long)]
    pub base_url: Option<String>,
    /// Model name (overrides GEN_MODEL).
    #[arg(long)]
    pub model: Option<String>,
    /// Maximum concurrent backend requests.
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    #[arg(long, default_value_t = 256)]
    pub max_new_tokens: u32,
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
}

/// Prompt profile used by `predict`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PromptProfile {
    /// Fixed system message for the fine-tuned classifiers.
    Finetuned,
    /// Instruction listing the six labels, for unadapted models.
    Zeroshot,
}

/// Trainer config profile used by `emit-config`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConfigProfile {
    ReasoningGen,
    Downstream,
}

impl From<ConfigProfile> for ProfileKind {
    fn from(profile: ConfigProfile) -> ProfileKind {
        match profile {
            ConfigProfile::ReasoningGen => ProfileKind::ReasoningGen,
            ConfigProfile::Downstream => ProfileKind::Downstream,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Restructure a reasoning-triple corpus into completion-format
    /// training records with an 80/20 train/validation split.
    Transform {
        /// Triple file (JSONL with question/answer/reasoning fields).
        #[arg(long)]
        input: PathBuf,
        /// Output prefix; writes <prefix>.train.jsonl and
        /// <prefix>.validation.jsonl.
        #[arg(long)]
        output: String,
        /// Shuffle seed for the split.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a reasoning for every training example and emit the
    /// paired reasoning / label-only chat datasets.
    Augment {
        /// Labeled examples (JSONL with text/label fields).
        #[arg(long)]
        input: PathBuf,
        /// Output prefix; writes <prefix>.emotion-reasoning.jsonl,
        /// <prefix>.no-emotion-reasoning.jsonl, and <prefix>.failures.jsonl.
        #[arg(long)]
        output: String,
        #[command(flatten)]
        backend: BackendArgs,
        /// Journal flush cadence, in examples.
        #[arg(long, default_value_t = 500)]
        checkpoint_every: usize,
    },
    /// Run inference over a labeled test file and record raw generations.
    Predict {
        #[arg(long)]
        input: PathBuf,
        /// Prediction file to write (JSONL with id/gold/generated).
        #[arg(long)]
        output: PathBuf,
        /// Prompt profile.
        #[arg(long, value_enum, default_value_t = PromptProfile::Finetuned)]
        profile: PromptProfile,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Score a prediction file into a full evaluation report.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        /// Output prefix; writes <prefix>.report.json, <prefix>.report.md,
        /// and <prefix>.matrix.csv.
        #[arg(long)]
        output: String,
        /// Run name recorded in the report (defaults to the output stem).
        #[arg(long)]
        name: Option<String>,
        /// Optional gold file to cross-check ids and labels against.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Compare evaluation reports: accuracy/F1 tables, improvement row,
    /// and a two-proportion z-test between the designated runs.
    Compare {
        /// Report JSON of the proposed run.
        #[arg(long)]
        proposed: PathBuf,
        /// Report JSON of the baseline run.
        #[arg(long)]
        baseline: PathBuf,
        /// Additional report files to include in the tables.
        #[arg(long = "run")]
        runs: Vec<PathBuf>,
        /// Output prefix; writes <prefix>.comparison.md.
        #[arg(long)]
        output: String,
    },
    /// Emit a trainer-ready fine-tuning config.
    EmitConfig {
        #[arg(long, value_enum)]
        profile: ConfigProfile,
        /// Dataset path recorded in the config.
        #[arg(long)]
        dataset_path: String,
        #[arg(long)]
        output: PathBuf,
    },
}

async fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Transform {
            input,
            output,
            seed,
        } => commands::transform(&input, &output, seed),
        Command::Augment {
            input,
            output,
            backend,
            checkpoint_every,
        } => commands::augment(&input, &output, &backend, checkpoint_every).await,
        Command::Predict {
            input,
            output,
            profile,
            backend,
        } => commands::predict(&input, &output, profile, &backend).await,
        Command::Evaluate {
            input,
            output,
            name,
            gold,
        } => commands::evaluate(&input, &output, name, gold),
        Command::Compare {
            proposed,
            baseline,
            runs,
            output,
        } => commands::compare(&proposed, &baseline, &runs, &output),
        Command::EmitConfig {
            profile,
            dataset_path,
            output,
        } => commands::emit_config_command(profile.into(), &dataset_path, &output),
    }
}

#[tokio::main]
async fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(cli).await {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
