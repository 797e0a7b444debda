//! Implementations of the pipeline subcommands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use serde::{Deserialize, Serialize};

use riclass_core::augment::{augment_dataset, verify_alignment, AugmentOptions, Journal};
use riclass_core::corpus::{
    ingest_examples, ingest_triples, percent_tenths, split_80_20, TextExample,
};
use riclass_core::genbackend::{
    generate_all, BackendConfig, DecodingOptions, FinishReason, GenRequest, Generator, HttpBackend,
    StubBackend, ENV_API_KEY, ENV_BASE_URL, ENV_MODEL,
};
use riclass_core::metrics::{
    evaluate_predictions, read_predictions, write_predictions, EvalReport, PredictionRecord,
};
use riclass_core::prompting::{downstream_messages, stage1_prompt, zeroshot_messages, ChatRecord};
use riclass_core::report::{render_comparison, render_confusion, ComparisonReport, ConfusionStyle};
use riclass_core::trainconfig::{emit_config, ProfileKind, TrainProfile};

use crate::manifest::{manifest_path, BackendSnapshot, RunManifest, StagedOutputs};
use crate::{BackendArgs, PromptProfile};

/// One stage-1 training record: the question/answer prompt and the
/// reasoning the trainer should learn to complete it with.
#[derive(Debug, Serialize, Deserialize)]
struct CompletionRecord {
    prompt: String,
    completion: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct FailureRecord {
    id: u64,
    error: String,
}

fn open_input(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> anyhow::Result<()> {
    let mut writer =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for record in records {
        serde_json::to_writer(&mut writer, record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

fn resolved_env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn decoding_from(args: &BackendArgs) -> DecodingOptions {
    DecodingOptions {
        max_new_tokens: args.max_new_tokens,
        temperature: args.temperature,
        stop: Vec::new(),
        seed: Some(args.seed),
    }
}

/// Build the generator selected by the flags: the offline stub, or an
/// HTTP backend configured from flags and the GEN_* environment.
fn make_generator(args: &BackendArgs) -> anyhow::Result<(Box<dyn Generator>, BackendSnapshot)> {
    if args.stub {
        let snapshot = BackendSnapshot {
            kind: "stub".into(),
            base_url: None,
            model: None,
            api_key: "(unset)".into(),
            max_in_flight: args.max_in_flight,
            max_new_tokens: args.max_new_tokens,
            temperature: args.temperature,
        };
        return Ok((Box::new(StubBackend::new(args.seed)), snapshot));
    }
    let base_url = args
        .base_url
        .clone()
        .or_else(|| resolved_env(ENV_BASE_URL))
        .with_context(|| {
            format!("no backend URL: pass --base-url, set {ENV_BASE_URL}, or use --stub")
        })?;
    let model = args
        .model
        .clone()
        .or_else(|| resolved_env(ENV_MODEL))
        .with_context(|| format!("no model name: pass --model or set {ENV_MODEL}"))?;
    let mut config = BackendConfig::new(base_url, model);
    config.api_key = resolved_env(ENV_API_KEY);
    config.max_in_flight = args.max_in_flight;
    let snapshot = BackendSnapshot {
        kind: "http".into(),
        base_url: Some(config.base_url.clone()),
        model: Some(config.model_name.clone()),
        api_key: if config.api_key.is_some() {
            "(redacted)".into()
        } else {
            "(unset)".into()
        },
        max_in_flight: args.max_in_flight,
        max_new_tokens: args.max_new_tokens,
        temperature: args.temperature,
    };
    Ok((Box::new(HttpBackend::new(config)?), snapshot))
}

/// `transform`: reasoning triples -> stage-1 completion records with an
/// 80/20 train/validation split.
pub fn transform(input: &Path, output: &str, seed: u64) -> anyhow::Result<()> {
    let triples = ingest_triples(open_input(input)?)
        .with_context(|| format!("reading {}", input.display()))?;
    ensure!(
        !triples.is_empty(),
        "{} contains no triples",
        input.display()
    );
    let total = triples.len();
    let (train, validation) = split_80_20(triples, seed)?;

    let to_records = |triples: &[riclass_core::corpus::ReasoningTriple]| {
        triples
            .iter()
            .map(|t| {
                Ok(CompletionRecord {
                    prompt: stage1_prompt(&t.question, &t.answer)?,
                    completion: t.reasoning.clone(),
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()
    };
    let train_records = to_records(&train)?;
    let validation_records = to_records(&validation)?;

    let mut staged = StagedOutputs::new();
    let train_path = staged.stage(format!("{output}.train.jsonl"));
    let validation_path = staged.stage(format!("{output}.validation.jsonl"));
    write_jsonl(&train_path, &train_records)?;
    write_jsonl(&validation_path, &validation_records)?;

    RunManifest::new(
        "transform",
        vec![input.to_path_buf()],
        &staged.final_paths(),
    )
    .with_seed(seed)
    .write(&manifest_path(output))?;
    staged.commit()?;
    println!(
        "transform: {total} triples -> {} train + {} validation records",
        train_records.len(),
        validation_records.len()
    );
    Ok(())
}

/// `augment`: emotion training file -> the two parallel chat datasets.
pub async fn augment(
    input: &Path,
    output: &str,
    args: &BackendArgs,
    checkpoint_every: usize,
) -> anyhow::Result<()> {
    let examples = ingest_examples(open_input(input)?)
        .with_context(|| format!("reading {}", input.display()))?;
    let (generator, snapshot) = make_generator(args)?;
    let options = AugmentOptions {
        decoding: decoding_from(args),
        max_in_flight: args.max_in_flight,
        checkpoint_every,
    };
    let journal_file = PathBuf::from(format!("{output}.journal.jsonl"));
    let mut journal = Journal::open(&journal_file, checkpoint_every)?;
    let resumed = journal.len();
    if resumed > 0 {
        println!("augment: resuming; journal already holds {resumed} results");
    }

    let outcome =
        augment_dataset(&examples, generator.as_ref(), &options, Some(&mut journal)).await?;
    let ra_records = outcome.ra_records();
    let a_records = outcome.a_records();
    let alignment = verify_alignment(&ra_records, &a_records);
    ensure!(
        alignment.aligned,
        "emitted datasets misaligned: {:?}",
        alignment.first_mismatch
    );

    let failures: Vec<FailureRecord> = outcome
        .failures
        .iter()
        .map(|(id, error)| FailureRecord {
            id: *id,
            error: error.clone(),
        })
        .collect();

    let mut staged = StagedOutputs::new();
    let ra_path = staged.stage(format!("{output}.emotion-reasoning.jsonl"));
    let a_path = staged.stage(format!("{output}.no-emotion-reasoning.jsonl"));
    let failures_path = staged.stage(format!("{output}.failures.jsonl"));
    write_jsonl(&ra_path, &ra_records)?;
    write_jsonl(&a_path, &a_records)?;
    write_jsonl(&failures_path, &failures)?;

    RunManifest::new("augment", vec![input.to_path_buf()], &staged.final_paths())
        .with_seed(args.seed)
        .with_backend(snapshot)
        .write(&manifest_path(output))?;
    staged.commit()?;
    // The journal only matters for interrupted runs.
    std::fs::remove_file(&journal_file).ok();
    println!(
        "augment: {} examples -> {} record pairs, {} failures",
        examples.len(),
        outcome.pairs.len(),
        failures.len()
    );
    Ok(())
}

/// `predict`: test file -> raw generations, one record per example.
pub async fn predict(
    input: &Path,
    output: &Path,
    profile: PromptProfile,
    args: &BackendArgs,
) -> anyhow::Result<()> {
    let examples = ingest_examples(open_input(input)?)
        .with_context(|| format!("reading {}", input.display()))?;
    ensure!(
        !examples.is_empty(),
        "{} contains no examples",
        input.display()
    );
    let (generator, snapshot) = make_generator(args)?;
    let decoding = decoding_from(args);

    let messages = |example: &TextExample| -> anyhow::Result<ChatRecord> {
        Ok(match profile {
            PromptProfile::Finetuned => downstream_messages(&example.text)?,
            PromptProfile::Zeroshot => zeroshot_messages(&example.text)?,
        })
    };
    let requests = examples
        .iter()
        .map(|ex| Ok(GenRequest::chat(messages(ex)?, &decoding)?))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let results = generate_all(generator.as_ref(), &requests, args.max_in_flight).await;
    let records: Vec<PredictionRecord> = examples
        .iter()
        .zip(results)
        .map(|(example, result)| {
            let (generated, error) = match result {
                Ok(response) if response.finish_reason != FinishReason::Error => {
                    (response.text, None)
                }
                Ok(_) => (
                    String::new(),
                    Some("generation failed after retries".to_string()),
                ),
                Err(e) => (String::new(), Some(e.to_string())),
            };
            PredictionRecord {
                id: example.id,
                gold: example.label,
                generated,
                error,
            }
        })
        .collect();
    let failed = records.iter().filter(|r| r.error.is_some()).count();

    let mut staged = StagedOutputs::new();
    let predictions_path = staged.stage(output);
    let mut writer = BufWriter::new(File::create(&predictions_path)?);
    write_predictions(&records, &mut writer)?;
    writer.flush()?;

    RunManifest::new("predict", vec![input.to_path_buf()], &staged.final_paths())
        .with_seed(args.seed)
        .with_backend(snapshot)
        .write(&manifest_path(&output.display().to_string()))?;
    staged.commit()?;
    println!(
        "predict: {} records written ({failed} failed generations)",
        records.len()
    );
    Ok(())
}

fn check_against_gold(records: &[PredictionRecord], gold_path: &Path) -> anyhow::Result<()> {
    let gold = ingest_examples(open_input(gold_path)?)
        .with_context(|| format!("reading {}", gold_path.display()))?;
    ensure!(
        gold.len() == records.len(),
        "id mismatch: {} gold examples vs {} predictions",
        gold.len(),
        records.len()
    );
    let mut by_id: std::collections::HashMap<u64, &TextExample> =
        gold.iter().map(|ex| (ex.id, ex)).collect();
    for record in records {
        match by_id.remove(&record.id) {
            None => bail!(
                "id mismatch: prediction id {} missing from gold file",
                record.id
            ),
            Some(example) => ensure!(
                example.label == record.gold,
                "gold label mismatch for id {}: file says {}, prediction says {}",
                record.id,
                example.label,
                record.gold
            ),
        }
    }
    Ok(())
}

fn single_run_markdown(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# Evaluation: {}\n\n", report.name));
    let accuracy_tenths = percent_tenths(report.correct(), report.total());
    out.push_str(&format!("- records: {}\n", report.total()));
    out.push_str(&format!("- correct: {}\n", report.correct()));
    out.push_str(&format!(
        "- accuracy: {}.{}%\n",
        accuracy_tenths / 10,
        accuracy_tenths % 10
    ));
    out.push_str(&format!("- macro F1: {:.4}\n", report.macro_f1));
    out.push_str(&format!("- weighted F1: {:.4}\n", report.weighted_f1));
    out.push_str(&format!(
        "- invalid generations: {}\n\n",
        report.matrix.invalid_count()
    ));

    out.push_str("| Class | Precision | Recall | F1 | Support |\n|---|---|---|---|---|\n");
    for class in &report.per_class {
        out.push_str(&format!(
            "| {} | {:.4} | {:.4} | {:.4} | {} |\n",
            class.label, class.precision, class.recall, class.f1, class.support
        ));
    }
    out.push_str("\n```\n");
    let mut ascii = Vec::new();
    render_confusion(&report.matrix, ConfusionStyle::Ascii, &mut ascii).expect("in-memory render");
    out.push_str(&String::from_utf8(ascii).expect("ascii render is utf-8"));
    out.push_str("```\n");
    out
}

/// `evaluate`: prediction file -> report JSON, markdown summary, and
/// matrix CSV.
pub fn evaluate(
    input: &Path,
    output: &str,
    name: Option<String>,
    gold: Option<PathBuf>,
) -> anyhow::Result<()> {
    let records = read_predictions(open_input(input)?)
        .with_context(|| format!("reading {}", input.display()))?;
    ensure!(
        !records.is_empty(),
        "{} contains no predictions",
        input.display()
    );
    if let Some(gold_path) = &gold {
        check_against_gold(&records, gold_path)?;
    }
    let run_name = name.unwrap_or_else(|| {
        Path::new(output)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".to_string())
    });
    let report = evaluate_predictions(&run_name, &records)?;

    let mut staged = StagedOutputs::new();
    let json_path = staged.stage(format!("{output}.report.json"));
    let md_path = staged.stage(format!("{output}.report.md"));
    let csv_path = staged.stage(format!("{output}.matrix.csv"));
    std::fs::write(
        &json_path,
        format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    std::fs::write(&md_path, single_run_markdown(&report))?;
    let mut csv = Vec::new();
    report.matrix.to_csv(&mut csv)?;
    std::fs::write(&csv_path, csv)?;

    let mut inputs = vec![input.to_path_buf()];
    inputs.extend(gold.clone());
    RunManifest::new("evaluate", inputs, &staged.final_paths()).write(&manifest_path(output))?;
    staged.commit()?;
    let tenths = percent_tenths(report.correct(), report.total());
    println!(
        "evaluate: {} -> accuracy {}.{} ({} of {})",
        run_name,
        tenths / 10,
        tenths % 10,
        report.correct(),
        report.total()
    );
    Ok(())
}

fn read_report(path: &Path) -> anyhow::Result<EvalReport> {
    let body =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&body).with_context(|| format!("parsing report {}", path.display()))
}

/// `compare`: two or more report files -> comparison tables and z-test.
pub fn compare(
    proposed: &Path,
    baseline: &Path,
    extra_runs: &[PathBuf],
    output: &str,
) -> anyhow::Result<()> {
    let mut runs = Vec::new();
    for path in extra_runs {
        runs.push(read_report(path)?);
    }
    let baseline_report = read_report(baseline)?;
    let proposed_report = read_report(proposed)?;
    let baseline_name = baseline_report.name.clone();
    let proposed_name = proposed_report.name.clone();
    runs.push(baseline_report);
    runs.push(proposed_report);

    let comparison = ComparisonReport::new(runs, &proposed_name, &baseline_name)?;
    let mut staged = StagedOutputs::new();
    let md_path = staged.stage(format!("{output}.comparison.md"));
    let mut writer = BufWriter::new(File::create(&md_path)?);
    render_comparison(&comparison, &mut writer)?;
    writer.flush()?;
    drop(writer);

    let mut inputs = vec![proposed.to_path_buf(), baseline.to_path_buf()];
    inputs.extend(extra_runs.iter().cloned());
    RunManifest::new("compare", inputs, &staged.final_paths()).write(&manifest_path(output))?;
    staged.commit()?;
    println!(
        "compare: {} vs {}: z = {:.4}, p = {:.3e}",
        proposed_name,
        baseline_name,
        comparison.significance.z,
        comparison.significance.p_two_sided
    );
    Ok(())
}

/// `emit-config`: write one of the two trainer profiles.
pub fn emit_config_command(
    kind: ProfileKind,
    dataset_path: &str,
    output: &Path,
) -> anyhow::Result<()> {
    let profile = TrainProfile::for_kind(kind);
    let mut staged = StagedOutputs::new();
    let config_path = staged.stage(output);
    let mut writer = BufWriter::new(File::create(&config_path)?);
    let bytes = emit_config(&profile, dataset_path, &mut writer)?;
    writer.flush()?;
    drop(writer);

    RunManifest::new("emit-config", vec![], &staged.final_paths())
        .write(&manifest_path(&output.display().to_string()))?;
    staged.commit()?;
    println!(
        "emit-config: wrote {} profile ({bytes} bytes)",
        profile.name.as_str()
    );
    Ok(())
}
