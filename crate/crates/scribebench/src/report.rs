//! Report and comparison directory writers: result tables in three formats,
//! comparison tables, SVG charts, and the run manifest that pins tool
//! version, config hash, and input checksums.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use scribebench_core::report::{
    Aggregate, ComparisonReport, MetricGroup, ReportError, TableFormat, compare, render_chart,
    render_comparison_markdown, render_tables,
};

use crate::util::{sha256_hex, write_atomic};

/// Version of the on-disk record formats.
pub const FORMAT_VERSION: &str = "1";

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Digest of an input file, for the run manifest.
pub fn input_digest(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Writes `run_manifest` into `out_dir`: tool and format version, the
/// resolved config hash, and a checksum per input. Contents are fully
/// deterministic, so reruns stay byte-identical.
pub fn write_run_manifest(
    out_dir: &Path,
    command: &str,
    config_hash: &str,
    inputs: &[(String, String)],
) -> io::Result<()> {
    let inputs: BTreeMap<&str, &str> = inputs
        .iter()
        .map(|(path, digest)| (path.as_str(), digest.as_str()))
        .collect();
    let manifest = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "format_version": FORMAT_VERSION,
        "command": command,
        "config_hash": config_hash,
        "inputs": inputs,
    });
    write_atomic(
        &out_dir.join("run_manifest"),
        manifest.to_string().as_bytes(),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum ReportWriteError {
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn write(path: &Path, contents: &str) -> Result<(), ReportWriteError> {
    write_atomic(path, contents.as_bytes()).map_err(|e| ReportWriteError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Renders `tables.md`, `tables.csv`, and `tables.jsonl` into the report
/// directory. The jsonl file is the machine-readable form consumed by the
/// compare command.
pub fn write_report_dir(aggregates: &[Aggregate], out_dir: &Path) -> Result<(), ReportWriteError> {
    std::fs::create_dir_all(out_dir).map_err(|e| ReportWriteError::Io {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    write(
        &out_dir.join("tables.md"),
        &render_tables(aggregates, TableFormat::Markdown)?,
    )?;
    write(
        &out_dir.join("tables.csv"),
        &render_tables(aggregates, TableFormat::Csv)?,
    )?;
    write(
        &out_dir.join("tables.jsonl"),
        &render_tables(aggregates, TableFormat::JsonLines)?,
    )?;
    Ok(())
}

fn slug(label: &str) -> String {
    let mut out = String::new();
    let mut gap = false;
    for ch in label.chars() {
        if ch.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('-');
            }
            gap = false;
            out.extend(ch.to_lowercase());
        } else {
            gap = true;
        }
    }
    if out.is_empty() {
        "dataset".to_string()
    } else {
        out
    }
}

/// Builds per-dataset comparisons between two aggregate sets (matched on the
/// dataset label), writing `comparison.md` plus one SVG per available metric
/// group under `charts/`.
pub fn write_comparison_dir(
    baseline: &[Aggregate],
    treatment: &[Aggregate],
    out_dir: &Path,
) -> Result<Vec<ComparisonReport>, ReportWriteError> {
    let treatment_by_dataset: BTreeMap<&str, &Aggregate> = treatment
        .iter()
        .map(|a| (a.row.dataset.as_str(), a))
        .collect();
    let mut comparisons = Vec::new();
    for base in baseline {
        if let Some(treat) = treatment_by_dataset.get(base.row.dataset.as_str()) {
            comparisons.push(compare(base, treat)?);
        }
    }
    if comparisons.is_empty() {
        return Err(ReportError::EmptyInput.into());
    }

    let charts_dir = out_dir.join("charts");
    std::fs::create_dir_all(&charts_dir).map_err(|e| ReportWriteError::Io {
        path: charts_dir.clone(),
        message: e.to_string(),
    })?;

    let mut markdown = String::new();
    for cmp in &comparisons {
        markdown.push_str(&render_comparison_markdown(cmp));
        markdown.push('\n');
        for group in [
            MetricGroup::Automated,
            MetricGroup::Quality,
            MetricGroup::Hallucination,
            MetricGroup::Omission,
        ] {
            match render_chart(cmp, group) {
                Ok(svg) => {
                    let name = format!("{}_{}.svg", slug(&cmp.dataset), group.name());
                    write(&charts_dir.join(name), &svg)?;
                }
                // A group with no shared values simply has no chart.
                Err(ReportError::EmptyMetricGroup { .. }) => {}
                Err(other) => return Err(other.into()),
            }
        }
    }
    write(&out_dir.join("comparison.md"), &markdown)?;
    Ok(comparisons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use scribebench_core::judge::parse_judge_response;
    use scribebench_core::report::{JudgedRow, ScoreRow, aggregate};
    use scribebench_core::rouge::RougeScore;

    fn aggregate_for(model: &str, rouge: f64, major_hallucinations: u64) -> Aggregate {
        let score = RougeScore {
            precision: rouge,
            recall: rouge,
            fmeasure: rouge,
        };
        let scores: Vec<ScoreRow> = (0..4)
            .map(|i| ScoreRow {
                id: format!("id-{i}"),
                model: model.into(),
                rouge1: Some(score),
                rouge2: Some(score),
                rouge_l: Some(score),
                rouge_lsum: Some(score),
                bertscore: None,
                bleurt: None,
            })
            .collect();
        let assessment = parse_judge_response(
            r#"{"factual_correctness": 3, "completeness": 3, "clinical_relevance": 3,
               "coherence_organization": 3, "terminology_accuracy": 3, "readability": 3,
               "overall_quality": 3, "negation_detection": true,
               "hallucination": "major", "omission": "minor", "rationale": ""}"#,
        )
        .unwrap();
        let judged: Vec<JudgedRow> = (0..4)
            .map(|i| {
                let mut row =
                    JudgedRow::from_assessment(format!("id-{i}"), model.into(), &assessment, 0);
                if (i as u64) >= major_hallucinations {
                    row.hallucination = scribebench_core::judge::SeverityCategory::No;
                }
                row
            })
            .collect();
        aggregate(&scores, &judged, "ACI Benchmark", model)
            .unwrap()
            .aggregate
    }

    #[test]
    fn report_dir_contains_all_three_table_files() {
        let dir = tempfile::tempdir().unwrap();
        let aggregates = vec![aggregate_for("Base", 0.346, 3)];
        write_report_dir(&aggregates, dir.path()).unwrap();
        for name in ["tables.md", "tables.csv", "tables.jsonl"] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let jsonl = std::fs::read_to_string(dir.path().join("tables.jsonl")).unwrap();
        let back: Aggregate = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
        assert_eq!(back, aggregates[0]);
    }

    #[test]
    fn comparison_dir_holds_markdown_and_charts() {
        let dir = tempfile::tempdir().unwrap();
        let baseline = vec![aggregate_for("Base", 0.346, 3)];
        let treatment = vec![aggregate_for("Tuned", 0.496, 1)];
        let comparisons = write_comparison_dir(&baseline, &treatment, dir.path()).unwrap();
        assert_eq!(comparisons.len(), 1);
        let md = std::fs::read_to_string(dir.path().join("comparison.md")).unwrap();
        assert!(md.contains("ROUGE-1"));
        assert!(md.contains("+43.4%"));
        for group in ["automated", "quality", "hallucination", "omission"] {
            let chart = dir
                .path()
                .join("charts")
                .join(format!("aci-benchmark_{group}.svg"));
            assert!(chart.exists(), "missing {group} chart");
        }
    }

    #[test]
    fn manifest_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let inputs = vec![("a.jsonl".to_string(), "00ff".to_string())];
        write_run_manifest(dir.path(), "report", "abc123", &inputs).unwrap();
        let first = std::fs::read(dir.path().join("run_manifest")).unwrap();
        write_run_manifest(dir.path(), "report", "abc123", &inputs).unwrap();
        let second = std::fs::read(dir.path().join("run_manifest")).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        assert!(text.contains("\"format_version\":\"1\""));
        assert!(!text.contains("time"), "manifest must not embed timestamps");
    }

    #[test]
    fn comparison_requires_matching_datasets() {
        let dir = tempfile::tempdir().unwrap();
        let baseline = vec![aggregate_for("Base", 0.3, 1)];
        let mut other = aggregate_for("Tuned", 0.4, 1);
        other.row.dataset = "Different".into();
        let err = write_comparison_dir(&baseline, &[other], dir.path()).unwrap_err();
        assert!(matches!(
            err,
            ReportWriteError::Report(ReportError::EmptyInput)
        ));
    }
}
