//! Command surface: synthesize, generate, evaluate, judge, report, compare,
//! and cache maintenance. Exit codes: 1 usage, 2 runtime, 3 input validation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use scribebench_core::bertscore::{IdfTable, build_idf};
use scribebench_core::report::{Aggregate, ReportError, ScoreRow, aggregate};
use scribebench_core::rouge::rouge_suite;

use crate::client::{ClientError, ClientPool, clear_cache};
use crate::config::{ConfigError, Overrides, RunConfig, load_run_config};
use crate::dataset::{
    DatasetError, ReferenceRecord, ingest_external_scores, load_candidates, load_judged,
    load_references, load_scores, load_transcripts, write_jsonl,
};
use crate::embed::{EmbedError, EmbeddingBackendRef, EmbeddingClient};
use crate::generator::generate_batch;
use crate::judging::{JudgeInput, judge_batch};
use crate::report::{
    FORMAT_VERSION, ReportWriteError, input_digest, write_comparison_dir, write_report_dir,
    write_run_manifest,
};
use crate::synthesis::{SynthesisConfig, SynthesisError, SynthesisTemplates, run_pipeline};
use crate::util::write_atomic;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (format v1)");

#[derive(Parser)]
#[command(name = "scribebench", version = VERSION, about = "Benchmark harness for transcript-to-note generation")]
pub struct Cli {
    /// Config file (JSON); also honored via SCRIBEBENCH_CONFIG.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override the chat endpoint base URL for every client.
    #[arg(long, global = true, value_name = "URL")]
    pub base_url: Option<String>,
    /// Override the response cache directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Metric {
    Rouge,
    Bertscore,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the multi-stage synthetic dataset workflow.
    Synthesize {
        /// Target number of records.
        #[arg(long)]
        count: usize,
        /// Medical specialty for the synthesized cases.
        #[arg(long)]
        specialty: Option<String>,
        /// Stop after this many records for human review before scaling up.
        #[arg(long, value_name = "N")]
        pilot: Option<usize>,
        /// Output dataset file (line-delimited records).
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Per-record stage checkpoint directory.
        #[arg(long, value_name = "DIR", default_value = ".scribebench/checkpoints")]
        checkpoint_dir: PathBuf,
        /// Model for all stages (per-stage overrides come from the config).
        #[arg(long)]
        model: Option<String>,
    },
    /// Generate candidate notes for a transcript dataset.
    Generate {
        #[arg(long, value_name = "FILE")]
        dataset: PathBuf,
        /// Generation profile name from the config file.
        #[arg(long)]
        profile: String,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Score candidates against references (ROUGE, BERTScore, external BLEURT).
    Evaluate {
        #[arg(long, value_name = "FILE")]
        references: PathBuf,
        #[arg(long, value_name = "FILE")]
        candidates: PathBuf,
        /// Metrics to compute.
        #[arg(long, value_delimiter = ',', default_values = ["rouge", "bertscore"])]
        metrics: Vec<Metric>,
        /// Token-embedding service endpoint; defaults to the built-in
        /// one-hot backend when absent.
        #[arg(long, value_name = "URL")]
        embedding_endpoint: Option<String>,
        /// Model id sent to the embedding service.
        #[arg(long, value_name = "ID", default_value = "bert-base-uncased")]
        embedding_model: String,
        /// Line-delimited external scores ({"id","metric","score"}); rows
        /// with metric "bleurt" are attached.
        #[arg(long, value_name = "FILE")]
        external_scores: Option<PathBuf>,
        /// Weight BERTScore tokens by inverse document frequency built from
        /// the reference corpus.
        #[arg(long)]
        idf: bool,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Judge candidates with an LLM rubric.
    Judge {
        #[arg(long, value_name = "FILE")]
        references: PathBuf,
        #[arg(long, value_name = "FILE")]
        candidates: PathBuf,
        /// Transcript dataset; when present the judge grounds hallucination
        /// and omission in the conversation.
        #[arg(long, value_name = "FILE")]
        transcripts: Option<PathBuf>,
        #[arg(long, value_name = "MODEL")]
        judge_model: Option<String>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Aggregate scores and judge verdicts into result tables.
    Report {
        #[arg(long, value_name = "FILE")]
        scores: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        judged: Option<PathBuf>,
        #[arg(long, value_name = "LABEL")]
        dataset_label: String,
        /// Display label for the model column; defaults to the label already
        /// on the rows.
        #[arg(long, value_name = "LABEL")]
        model_label: Option<String>,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Compare two report directories (baseline vs treatment).
    Compare {
        #[arg(long, value_name = "DIR")]
        baseline_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        treatment_dir: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Response-cache maintenance.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
pub enum CacheAction {
    /// Delete every cached response.
    Clear,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
            CliError::Validation(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(err: DatasetError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<ClientError> for CliError {
    fn from(err: ClientError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<SynthesisError> for CliError {
    fn from(err: SynthesisError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<EmbedError> for CliError {
    fn from(err: EmbedError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::UnknownProfile { .. } => CliError::Usage(err.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<ReportWriteError> for CliError {
    fn from(err: ReportWriteError) -> Self {
        match err {
            ReportWriteError::Report(report) => CliError::Validation(report.to_string()),
            io @ ReportWriteError::Io { .. } => CliError::Runtime(io.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        config_path: cli.config.clone(),
        base_url: cli.base_url.clone(),
        cache_dir: cli.cache_dir.clone(),
    };
    let config = load_run_config(&overrides)?;
    match cli.command {
        Command::Synthesize {
            count,
            specialty,
            pilot,
            out,
            checkpoint_dir,
            model,
        } => cmd_synthesize(
            &config,
            count,
            specialty,
            pilot,
            &out,
            checkpoint_dir,
            model,
        ),
        Command::Generate {
            dataset,
            profile,
            out,
        } => cmd_generate(&config, &dataset, &profile, &out),
        Command::Evaluate {
            references,
            candidates,
            metrics,
            embedding_endpoint,
            embedding_model,
            external_scores,
            idf,
            out,
        } => cmd_evaluate(
            &config,
            &references,
            &candidates,
            &metrics,
            embedding_endpoint.as_deref(),
            &embedding_model,
            external_scores.as_deref(),
            idf,
            &out,
        ),
        Command::Judge {
            references,
            candidates,
            transcripts,
            judge_model,
            out,
        } => cmd_judge(
            &config,
            &references,
            &candidates,
            transcripts.as_deref(),
            judge_model,
            &out,
        ),
        Command::Report {
            scores,
            judged,
            dataset_label,
            model_label,
            out_dir,
        } => cmd_report(
            &config,
            scores.as_deref(),
            judged.as_deref(),
            &dataset_label,
            model_label.as_deref(),
            &out_dir,
        ),
        Command::Compare {
            baseline_dir,
            treatment_dir,
            out_dir,
        } => cmd_compare(&config, &baseline_dir, &treatment_dir, &out_dir),
        Command::Cache {
            action: CacheAction::Clear,
        } => {
            let removed = clear_cache(&config.client.cache_dir)?;
            println!(
                "cleared {removed} cached response(s) from {}",
                config.client.cache_dir.display()
            );
            Ok(())
        }
    }
}

fn print_warnings(warnings: &[String]) {
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
}

// Manifest sibling for single-file outputs: `<out>.manifest`.
fn write_file_manifest(
    out: &Path,
    command: &str,
    config_hash: &str,
    inputs: &[(String, String)],
) -> Result<(), CliError> {
    let inputs: BTreeMap<&str, &str> = inputs
        .iter()
        .map(|(p, d)| (p.as_str(), d.as_str()))
        .collect();
    let manifest = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "format_version": FORMAT_VERSION,
        "command": command,
        "config_hash": config_hash,
        "inputs": inputs,
    });
    let file_name = out
        .file_name()
        .ok_or_else(|| CliError::Usage("output path has no file name".to_string()))?
        .to_string_lossy()
        .into_owned();
    let path = out.with_file_name(format!("{file_name}.manifest"));
    write_atomic(&path, manifest.to_string().as_bytes())?;
    Ok(())
}

fn digest_inputs(paths: &[&Path]) -> Result<Vec<(String, String)>, CliError> {
    paths
        .iter()
        .map(|path| {
            Ok((
                path.display().to_string(),
                input_digest(path).map_err(|e| {
                    CliError::Runtime(format!("cannot hash {}: {e}", path.display()))
                })?,
            ))
        })
        .collect()
}

fn fail_batch(kind: &str, failures: &[(String, String)]) -> CliError {
    let mut lines = vec![format!(
        "{} record(s) permanently failed during {kind}:",
        failures.len()
    )];
    for (id, error) in failures {
        lines.push(format!("  {id}: {error}"));
    }
    CliError::Runtime(lines.join("\n"))
}

fn cmd_synthesize(
    config: &RunConfig,
    count: usize,
    specialty: Option<String>,
    pilot: Option<usize>,
    out: &Path,
    checkpoint_dir: PathBuf,
    model: Option<String>,
) -> Result<(), CliError> {
    let base_model = model.unwrap_or_else(|| config.synthesis.model.clone());
    let mut synth = SynthesisConfig::new(count, checkpoint_dir, &config.client, &base_model);
    synth.specialty = specialty.unwrap_or_else(|| config.synthesis.specialty.clone());
    synth.max_revision_iters = config.synthesis.max_revision_iters;
    synth.pass_threshold = config.synthesis.pass_threshold;
    for (stage, profile) in [
        ("topics", &mut synth.stages.topics),
        ("context", &mut synth.stages.context),
        ("transcript", &mut synth.stages.transcript),
        ("critique", &mut synth.stages.critique),
        ("revise", &mut synth.stages.revise),
        ("note", &mut synth.stages.note),
    ] {
        if let Some(stage_model) = config.synthesis.stage_models.get(stage) {
            profile.model = stage_model.clone();
        }
    }

    let templates = SynthesisTemplates::defaults(&config.schema);
    let pool = ClientPool::new();
    let report = run_pipeline(&synth, &templates, &pool, &config.schema, pilot, out)?;
    if !report.failures.is_empty() {
        return Err(fail_batch("synthesis", &report.failures));
    }
    write_file_manifest(out, "synthesize", &config.config_hash, &[])?;
    println!("wrote {} record(s) to {}", report.written, out.display());
    if pilot.is_some() {
        println!(
            "pilot batch complete; review the records, then rerun without --pilot to scale to {count} using the same checkpoint dir"
        );
    }
    Ok(())
}

fn cmd_generate(
    config: &RunConfig,
    dataset: &Path,
    profile_name: &str,
    out: &Path,
) -> Result<(), CliError> {
    let transcripts = load_transcripts(dataset)?;
    print_warnings(&transcripts.warnings);
    let (profile, template) = config.resolve_profile(profile_name)?;
    let pool = ClientPool::new();
    let client = pool.client_for(&profile.client)?;
    let report = generate_batch(
        &transcripts.records,
        &profile,
        &template,
        &client,
        &config.schema,
        out,
    )?;
    if !report.failures.is_empty() {
        return Err(fail_batch("generation", &report.failures));
    }
    write_file_manifest(
        out,
        "generate",
        &config.config_hash,
        &digest_inputs(&[dataset])?,
    )?;
    println!("wrote {} candidate(s) to {}", report.written, out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    config: &RunConfig,
    references: &Path,
    candidates: &Path,
    metrics: &[Metric],
    embedding_endpoint: Option<&str>,
    embedding_model: &str,
    external_scores: Option<&Path>,
    idf: bool,
    out: &Path,
) -> Result<(), CliError> {
    let refs = load_references(references)?;
    print_warnings(&refs.warnings);
    let cands = load_candidates(candidates)?;
    print_warnings(&cands.warnings);

    let ref_map: BTreeMap<&str, &ReferenceRecord> =
        refs.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let orphans: Vec<&str> = cands
        .records
        .iter()
        .filter(|c| !ref_map.contains_key(c.id.as_str()))
        .map(|c| c.id.as_str())
        .collect();
    if !orphans.is_empty() {
        return Err(CliError::Validation(format!(
            "candidate id(s) without references: {}",
            orphans.join(", ")
        )));
    }
    let candidate_ids: BTreeSet<&str> = cands.records.iter().map(|c| c.id.as_str()).collect();
    for reference in &refs.records {
        if !candidate_ids.contains(reference.id.as_str()) {
            eprintln!("warning: reference `{}` has no candidate", reference.id);
        }
    }

    let selected: BTreeSet<Metric> = metrics.iter().copied().collect();
    let bleurt = match external_scores {
        Some(path) => {
            let (scores, warnings) = ingest_external_scores(path, "bleurt")?;
            print_warnings(&warnings);
            Some(scores)
        }
        None => None,
    };
    let idf_table: Option<IdfTable> = if idf {
        let corpus = refs.records.iter().map(|r| r.note.as_str());
        Some(build_idf(corpus, &config.rouge).map_err(|e| CliError::Validation(e.to_string()))?)
    } else {
        None
    };
    let backend = match embedding_endpoint {
        Some(endpoint) => EmbeddingBackendRef::http(endpoint, embedding_model),
        None => EmbeddingBackendRef::mock(),
    };
    let embedder =
        EmbeddingClient::new(backend, config.rouge, Some(config.client.cache_dir.clone()))?;

    let mut rows = Vec::with_capacity(cands.records.len());
    for candidate in &cands.records {
        let reference = ref_map[candidate.id.as_str()];
        let suite = selected
            .contains(&Metric::Rouge)
            .then(|| rouge_suite(&candidate.note, &reference.note, &config.rouge));
        let bertscore = if selected.contains(&Metric::Bertscore) {
            Some(embedder.score_pair(&candidate.note, &reference.note, idf_table.as_ref())?)
        } else {
            None
        };
        rows.push(ScoreRow {
            id: candidate.id.clone(),
            model: candidate.model.clone(),
            rouge1: suite.map(|s| s.rouge1),
            rouge2: suite.map(|s| s.rouge2),
            rouge_l: suite.map(|s| s.rouge_l),
            rouge_lsum: suite.map(|s| s.rouge_lsum),
            bertscore,
            bleurt: bleurt
                .as_ref()
                .and_then(|map| map.get(&candidate.id).copied()),
        });
    }
    write_jsonl(out, &rows)?;
    let mut inputs = vec![references, candidates];
    if let Some(path) = external_scores {
        inputs.push(path);
    }
    write_file_manifest(
        out,
        "evaluate",
        &config.config_hash,
        &digest_inputs(&inputs)?,
    )?;
    println!("wrote {} score row(s) to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_judge(
    config: &RunConfig,
    references: &Path,
    candidates: &Path,
    transcripts: Option<&Path>,
    judge_model: Option<String>,
    out: &Path,
) -> Result<(), CliError> {
    let refs = load_references(references)?;
    print_warnings(&refs.warnings);
    let cands = load_candidates(candidates)?;
    print_warnings(&cands.warnings);
    let transcript_map: Option<BTreeMap<String, String>> = match transcripts {
        Some(path) => {
            let loaded = load_transcripts(path)?;
            print_warnings(&loaded.warnings);
            Some(
                loaded
                    .records
                    .into_iter()
                    .map(|t| (t.id, t.transcript))
                    .collect(),
            )
        }
        None => None,
    };

    let ref_map: BTreeMap<&str, &ReferenceRecord> =
        refs.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut orphans = Vec::new();
    for candidate in &cands.records {
        if !ref_map.contains_key(candidate.id.as_str()) {
            orphans.push(format!("{} (no reference)", candidate.id));
        } else if let Some(map) = &transcript_map
            && !map.contains_key(&candidate.id)
        {
            orphans.push(format!("{} (no transcript)", candidate.id));
        }
    }
    if !orphans.is_empty() {
        return Err(CliError::Validation(format!(
            "candidate id(s) missing inputs: {}",
            orphans.join(", ")
        )));
    }

    let mut judge_config = config.judge.clone();
    if let Some(model) = judge_model {
        judge_config.judge_model = model;
    }
    let include_transcripts = judge_config.include_transcript && transcript_map.is_some();
    let inputs: Vec<JudgeInput> = cands
        .records
        .iter()
        .map(|candidate| JudgeInput {
            id: candidate.id.clone(),
            model: candidate.model.clone(),
            transcript: include_transcripts
                .then(|| transcript_map.as_ref().unwrap()[&candidate.id].clone()),
            reference_note: ref_map[candidate.id.as_str()].note.clone(),
            candidate_note: candidate.note.clone(),
        })
        .collect();

    let pool = ClientPool::new();
    let client = pool.client_for(&judge_config.client)?;
    let report = judge_batch(&inputs, &judge_config, &client, out)?;
    println!("wrote {} verdict(s) to {}", report.written, out.display());
    let mut manifest_inputs = vec![references, candidates];
    if let Some(path) = transcripts {
        manifest_inputs.push(path);
    }
    write_file_manifest(
        out,
        "judge",
        &config.config_hash,
        &digest_inputs(&manifest_inputs)?,
    )?;
    if !report.failures.is_empty() {
        return Err(fail_batch("judging", &report.failures));
    }
    Ok(())
}

fn cmd_report(
    config: &RunConfig,
    scores: Option<&Path>,
    judged: Option<&Path>,
    dataset_label: &str,
    model_label: Option<&str>,
    out_dir: &Path,
) -> Result<(), CliError> {
    if scores.is_none() && judged.is_none() {
        return Err(CliError::Usage(
            "provide --scores and/or --judged".to_string(),
        ));
    }
    let score_rows = match scores {
        Some(path) => {
            let loaded = load_scores(path)?;
            print_warnings(&loaded.warnings);
            loaded.records
        }
        None => Vec::new(),
    };
    let judged_rows = match judged {
        Some(path) => {
            let loaded = load_judged(path)?;
            print_warnings(&loaded.warnings);
            loaded.records
        }
        None => Vec::new(),
    };

    if !score_rows.is_empty() && !judged_rows.is_empty() {
        let score_ids: BTreeSet<&str> = score_rows.iter().map(|r| r.id.as_str()).collect();
        let judged_ids: BTreeSet<&str> = judged_rows.iter().map(|r| r.id.as_str()).collect();
        let orphans: Vec<String> = score_ids
            .symmetric_difference(&judged_ids)
            .map(|id| id.to_string())
            .collect();
        if !orphans.is_empty() {
            return Err(CliError::Validation(format!(
                "score and judged id sets differ; orphan id(s): {}",
                orphans.join(", ")
            )));
        }
    }

    let inferred_model = score_rows
        .first()
        .map(|r| r.model.clone())
        .or_else(|| judged_rows.first().map(|r| r.model.clone()))
        .unwrap_or_default();
    let label = model_label.map(str::to_string).unwrap_or(inferred_model);

    let outcome =
        aggregate(&score_rows, &judged_rows, dataset_label, &label).map_err(|e| match e {
            ReportError::EmptyInput => CliError::Validation("no rows to aggregate".to_string()),
            other => CliError::Validation(other.to_string()),
        })?;
    print_warnings(&outcome.warnings);

    write_report_dir(&[outcome.aggregate], out_dir)?;
    let mut inputs: Vec<&Path> = Vec::new();
    if let Some(path) = scores {
        inputs.push(path);
    }
    if let Some(path) = judged {
        inputs.push(path);
    }
    write_run_manifest(
        out_dir,
        "report",
        &config.config_hash,
        &digest_inputs(&inputs)?,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("wrote report to {}", out_dir.display());
    Ok(())
}

fn load_aggregates(dir: &Path) -> Result<Vec<Aggregate>, CliError> {
    let path = dir.join("tables.jsonl");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut aggregates = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let aggregate: Aggregate = serde_json::from_str(line)
            .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), index + 1)))?;
        aggregates.push(aggregate);
    }
    if aggregates.is_empty() {
        return Err(CliError::Validation(format!(
            "{} holds no aggregates",
            path.display()
        )));
    }
    Ok(aggregates)
}

fn cmd_compare(
    config: &RunConfig,
    baseline_dir: &Path,
    treatment_dir: &Path,
    out_dir: &Path,
) -> Result<(), CliError> {
    let baseline = load_aggregates(baseline_dir)?;
    let treatment = load_aggregates(treatment_dir)?;
    let comparisons = write_comparison_dir(&baseline, &treatment, out_dir)?;
    let inputs = digest_inputs(&[
        &baseline_dir.join("tables.jsonl"),
        &treatment_dir.join("tables.jsonl"),
    ])?;
    write_run_manifest(out_dir, "compare", &config.config_hash, &inputs)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "wrote comparison of {} dataset(s) to {}",
        comparisons.len(),
        out_dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_metric_is_a_usage_error() {
        let code = run([
            "scribebench",
            "evaluate",
            "--references",
            "r",
            "--candidates",
            "c",
            "--metrics",
            "bleu",
            "--out",
            "o",
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn version_flag_exits_zero() {
        assert_eq!(run(["scribebench", "--version"]), 0);
        assert_eq!(run(["scribebench", "--help"]), 0);
    }

    #[test]
    fn missing_subcommand_is_usage() {
        assert_eq!(run(["scribebench"]), 1);
    }

    #[test]
    fn report_requires_some_input() {
        let code = run([
            "scribebench",
            "report",
            "--dataset-label",
            "ds",
            "--out-dir",
            "/tmp/nonexistent-out",
        ]);
        assert_eq!(code, 1);
    }
}
