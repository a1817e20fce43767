//! Aggregation of per-pair scores and judge verdicts into result tables,
//! safety-count matrices, baseline-vs-treatment comparisons, and SVG bar
//! charts. Everything here renders to strings; file placement belongs to the
//! caller.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bertscore::BertScoreResult;
use crate::judge::{JudgeAssessment, LikertScore, SeverityCategory, composite_score};
use crate::rouge::RougeScore;

/// One line of the per-pair scores file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub model: String,
    pub rouge1: Option<RougeScore>,
    pub rouge2: Option<RougeScore>,
    #[serde(rename = "rougeL")]
    pub rouge_l: Option<RougeScore>,
    #[serde(rename = "rougeLsum")]
    pub rouge_lsum: Option<RougeScore>,
    pub bertscore: Option<BertScoreResult>,
    pub bleurt: Option<f64>,
}

/// One line of the judged file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedRow {
    pub id: String,
    pub model: String,
    pub factual_correctness: LikertScore,
    pub completeness: LikertScore,
    pub clinical_relevance: LikertScore,
    pub coherence_organization: LikertScore,
    pub terminology_accuracy: LikertScore,
    pub readability: LikertScore,
    pub overall_quality: LikertScore,
    pub negation_detection: bool,
    pub hallucination: SeverityCategory,
    pub omission: SeverityCategory,
    pub rationale: String,
    #[serde(default)]
    pub reask_count: u32,
}

impl JudgedRow {
    pub fn from_assessment(
        id: String,
        model: String,
        a: &JudgeAssessment,
        reask_count: u32,
    ) -> Self {
        Self {
            id,
            model,
            factual_correctness: a.factual_correctness,
            completeness: a.completeness,
            clinical_relevance: a.clinical_relevance,
            coherence_organization: a.coherence_organization,
            terminology_accuracy: a.terminology_accuracy,
            readability: a.readability,
            overall_quality: a.overall_quality,
            negation_detection: a.negation_detection,
            hallucination: a.hallucination,
            omission: a.omission,
            rationale: a.rationale.clone(),
            reask_count,
        }
    }

    pub fn assessment(&self) -> JudgeAssessment {
        JudgeAssessment {
            factual_correctness: self.factual_correctness,
            completeness: self.completeness,
            clinical_relevance: self.clinical_relevance,
            coherence_organization: self.coherence_organization,
            terminology_accuracy: self.terminology_accuracy,
            readability: self.readability,
            overall_quality: self.overall_quality,
            negation_detection: self.negation_detection,
            hallucination: self.hallucination,
            omission: self.omission,
            rationale: self.rationale.clone(),
        }
    }
}

/// Per-dataset, per-model means. Metric fields are fmeasure means unless
/// named otherwise; `None` means the input carried no values for the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub model: String,
    pub n: usize,
    pub rouge1: Option<f64>,
    pub rouge2: Option<f64>,
    #[serde(rename = "rougeL")]
    pub rouge_l: Option<f64>,
    #[serde(rename = "rougeLsum")]
    pub rouge_lsum: Option<f64>,
    pub bertscore_p: Option<f64>,
    pub bertscore_r: Option<f64>,
    pub bertscore_f1: Option<f64>,
    pub bleurt: Option<f64>,
    pub factual_correctness: Option<f64>,
    pub completeness: Option<f64>,
    pub clinical_relevance: Option<f64>,
    pub coherence_organization: Option<f64>,
    pub terminology_accuracy: Option<f64>,
    pub readability: Option<f64>,
    pub overall_quality: Option<f64>,
    pub composite: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeverityTriple {
    pub no: u64,
    pub minor: u64,
    pub major: u64,
}

impl SeverityTriple {
    pub fn sum(&self) -> u64 {
        self.no + self.minor + self.major
    }

    fn count(&mut self, severity: SeverityCategory) {
        match severity {
            SeverityCategory::No => self.no += 1,
            SeverityCategory::Minor => self.minor += 1,
            SeverityCategory::Major => self.major += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyCounts {
    pub hallucination: SeverityTriple,
    pub omission: SeverityTriple,
}

impl SafetyCounts {
    pub fn total(&self) -> u64 {
        self.hallucination.sum()
    }
}

/// An [`AggregateRow`] together with its safety counts; one line of the
/// aggregates file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub row: AggregateRow,
    pub safety: SafetyCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReportError {
    #[error("no rows to aggregate")]
    EmptyInput,
    #[error("rows mix model labels `{first}` and `{second}`")]
    MixedModels { first: String, second: String },
    #[error("dataset labels differ: `{baseline}` vs `{treatment}`")]
    DatasetMismatch { baseline: String, treatment: String },
    #[error("metric group `{group}` has no values to chart")]
    EmptyMetricGroup { group: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateOutcome {
    pub aggregate: Aggregate,
    /// Ids present on only one side of the score/judged join.
    pub warnings: Vec<String>,
}

// Permutation-invariant mean: values are sorted by total order before
// summation so row order cannot change the result bit pattern.
fn mean(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    Some(values.iter().sum::<f64>() / n)
}

fn shared_model<'a, I: IntoIterator<Item = &'a str>>(
    labels: I,
) -> Result<Option<&'a str>, ReportError> {
    let mut found: Option<&str> = None;
    for label in labels {
        match found {
            None => found = Some(label),
            Some(first) if first != label => {
                return Err(ReportError::MixedModels {
                    first: first.to_string(),
                    second: label.to_string(),
                });
            }
            _ => {}
        }
    }
    Ok(found)
}

/// Means and safety counts for one (dataset, model) cell. All rows must share
/// one model label; ids found on only one side are reported as warnings.
pub fn aggregate(
    scores: &[ScoreRow],
    judged: &[JudgedRow],
    dataset: &str,
    model: &str,
) -> Result<AggregateOutcome, ReportError> {
    if scores.is_empty() && judged.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let score_model = shared_model(scores.iter().map(|r| r.model.as_str()))?;
    let judged_model = shared_model(judged.iter().map(|r| r.model.as_str()))?;
    if let (Some(a), Some(b)) = (score_model, judged_model)
        && a != b
    {
        return Err(ReportError::MixedModels {
            first: a.to_string(),
            second: b.to_string(),
        });
    }

    let score_ids: BTreeSet<&str> = scores.iter().map(|r| r.id.as_str()).collect();
    let judged_ids: BTreeSet<&str> = judged.iter().map(|r| r.id.as_str()).collect();
    let mut warnings = Vec::new();
    if !scores.is_empty() && !judged.is_empty() {
        for id in score_ids.difference(&judged_ids) {
            warnings.push(format!("id `{id}` has scores but no judge verdict"));
        }
        for id in judged_ids.difference(&score_ids) {
            warnings.push(format!("id `{id}` has a judge verdict but no scores"));
        }
    }
    let n = score_ids.union(&judged_ids).count();

    let pick = |f: fn(&ScoreRow) -> Option<f64>| mean(scores.iter().filter_map(f).collect());
    let likert = |f: fn(&JudgedRow) -> LikertScore| {
        mean(judged.iter().map(|r| f64::from(f(r).value())).collect())
    };

    let mut safety = SafetyCounts::default();
    for row in judged {
        safety.hallucination.count(row.hallucination);
        safety.omission.count(row.omission);
    }

    let row = AggregateRow {
        dataset: dataset.to_string(),
        model: model.to_string(),
        n,
        rouge1: pick(|r| r.rouge1.map(|s| s.fmeasure)),
        rouge2: pick(|r| r.rouge2.map(|s| s.fmeasure)),
        rouge_l: pick(|r| r.rouge_l.map(|s| s.fmeasure)),
        rouge_lsum: pick(|r| r.rouge_lsum.map(|s| s.fmeasure)),
        bertscore_p: pick(|r| r.bertscore.map(|s| s.precision)),
        bertscore_r: pick(|r| r.bertscore.map(|s| s.recall)),
        bertscore_f1: pick(|r| r.bertscore.map(|s| s.f1)),
        bleurt: pick(|r| r.bleurt),
        factual_correctness: likert(|r| r.factual_correctness),
        completeness: likert(|r| r.completeness),
        clinical_relevance: likert(|r| r.clinical_relevance),
        coherence_organization: likert(|r| r.coherence_organization),
        terminology_accuracy: likert(|r| r.terminology_accuracy),
        readability: likert(|r| r.readability),
        overall_quality: likert(|r| r.overall_quality),
        composite: mean(
            judged
                .iter()
                .map(|r| composite_score(&r.assessment()))
                .collect(),
        ),
    };

    Ok(AggregateOutcome {
        aggregate: Aggregate { row, safety },
        warnings,
    })
}

/// (treatment - baseline) / baseline * 100; `None` when the baseline is 0.
pub fn percent_change(baseline: f64, treatment: f64) -> Option<f64> {
    if baseline == 0.0 {
        None
    } else {
        Some((treatment - baseline) / baseline * 100.0)
    }
}

/// How a field's values are printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Metric, // 3 decimals
    Likert, // 2 decimals
    Count,  // integer
}

impl FieldKind {
    pub fn format(self, value: f64) -> String {
        match self {
            FieldKind::Metric => format!("{value:.3}"),
            FieldKind::Likert => format!("{value:.2}"),
            FieldKind::Count => format!("{value:.0}"),
        }
    }
}

/// Chartable metric groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricGroup {
    Automated,
    Quality,
    Hallucination,
    Omission,
}

impl MetricGroup {
    pub fn name(self) -> &'static str {
        match self {
            MetricGroup::Automated => "automated",
            MetricGroup::Quality => "quality",
            MetricGroup::Hallucination => "hallucination",
            MetricGroup::Omission => "omission",
        }
    }

    fn title(self) -> &'static str {
        match self {
            MetricGroup::Automated => "Automated Evaluation Metrics",
            MetricGroup::Quality => "Clinical Quality Assessment",
            MetricGroup::Hallucination => "Hallucination Severity Counts",
            MetricGroup::Omission => "Omission Severity Counts",
        }
    }
}

/// One baseline-vs-treatment cell of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDelta {
    pub field: &'static str,
    pub kind: FieldKind,
    pub group: Option<MetricGroup>,
    pub baseline: f64,
    pub treatment: f64,
    pub delta: f64,
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub dataset: String,
    pub baseline_model: String,
    pub treatment_model: String,
    pub fields: Vec<FieldDelta>,
}

fn push_delta(
    fields: &mut Vec<FieldDelta>,
    field: &'static str,
    kind: FieldKind,
    group: Option<MetricGroup>,
    baseline: Option<f64>,
    treatment: Option<f64>,
) {
    if let (Some(b), Some(t)) = (baseline, treatment) {
        fields.push(FieldDelta {
            field,
            kind,
            group,
            baseline: b,
            treatment: t,
            delta: t - b,
            percent: percent_change(b, t),
        });
    }
}

/// Deltas and percent changes for every field shared by the two aggregates.
pub fn compare(
    baseline: &Aggregate,
    treatment: &Aggregate,
) -> Result<ComparisonReport, ReportError> {
    if baseline.row.dataset != treatment.row.dataset {
        return Err(ReportError::DatasetMismatch {
            baseline: baseline.row.dataset.clone(),
            treatment: treatment.row.dataset.clone(),
        });
    }
    let b = &baseline.row;
    let t = &treatment.row;
    let mut fields = Vec::new();
    use FieldKind::*;
    use MetricGroup::*;
    push_delta(
        &mut fields,
        "ROUGE-1",
        Metric,
        Some(Automated),
        b.rouge1,
        t.rouge1,
    );
    push_delta(
        &mut fields,
        "ROUGE-2",
        Metric,
        Some(Automated),
        b.rouge2,
        t.rouge2,
    );
    push_delta(
        &mut fields,
        "ROUGE-L",
        Metric,
        Some(Automated),
        b.rouge_l,
        t.rouge_l,
    );
    push_delta(
        &mut fields,
        "ROUGE-Lsum",
        Metric,
        Some(Automated),
        b.rouge_lsum,
        t.rouge_lsum,
    );
    push_delta(
        &mut fields,
        "BERTScore P",
        Metric,
        None,
        b.bertscore_p,
        t.bertscore_p,
    );
    push_delta(
        &mut fields,
        "BERTScore R",
        Metric,
        None,
        b.bertscore_r,
        t.bertscore_r,
    );
    push_delta(
        &mut fields,
        "BERTScore F1",
        Metric,
        Some(Automated),
        b.bertscore_f1,
        t.bertscore_f1,
    );
    push_delta(&mut fields, "BLEURT", Metric, None, b.bleurt, t.bleurt);
    push_delta(
        &mut fields,
        "Factual Correctness",
        Likert,
        Some(Quality),
        b.factual_correctness,
        t.factual_correctness,
    );
    push_delta(
        &mut fields,
        "Completeness",
        Likert,
        Some(Quality),
        b.completeness,
        t.completeness,
    );
    push_delta(
        &mut fields,
        "Clinical Relevance",
        Likert,
        Some(Quality),
        b.clinical_relevance,
        t.clinical_relevance,
    );
    push_delta(
        &mut fields,
        "Coherence and Organization",
        Likert,
        Some(Quality),
        b.coherence_organization,
        t.coherence_organization,
    );
    push_delta(
        &mut fields,
        "Terminology Accuracy",
        Likert,
        Some(Quality),
        b.terminology_accuracy,
        t.terminology_accuracy,
    );
    push_delta(
        &mut fields,
        "Readability",
        Likert,
        Some(Quality),
        b.readability,
        t.readability,
    );
    push_delta(
        &mut fields,
        "Overall Quality",
        Likert,
        Some(Quality),
        b.overall_quality,
        t.overall_quality,
    );
    push_delta(
        &mut fields,
        "Composite Score",
        Likert,
        Some(Quality),
        b.composite,
        t.composite,
    );

    let severities: [(&'static str, MetricGroup, u64, u64); 6] = [
        (
            "No Hallucination",
            Hallucination,
            baseline.safety.hallucination.no,
            treatment.safety.hallucination.no,
        ),
        (
            "Minor Hallucination",
            Hallucination,
            baseline.safety.hallucination.minor,
            treatment.safety.hallucination.minor,
        ),
        (
            "Major Hallucination",
            Hallucination,
            baseline.safety.hallucination.major,
            treatment.safety.hallucination.major,
        ),
        (
            "No Omission",
            Omission,
            baseline.safety.omission.no,
            treatment.safety.omission.no,
        ),
        (
            "Minor Omission",
            Omission,
            baseline.safety.omission.minor,
            treatment.safety.omission.minor,
        ),
        (
            "Major Omission",
            Omission,
            baseline.safety.omission.major,
            treatment.safety.omission.major,
        ),
    ];
    for (field, group, bc, tc) in severities {
        push_delta(
            &mut fields,
            field,
            Count,
            Some(group),
            Some(bc as f64),
            Some(tc as f64),
        );
    }

    Ok(ComparisonReport {
        dataset: b.dataset.clone(),
        baseline_model: b.model.clone(),
        treatment_model: t.model.clone(),
        fields,
    })
}

pub fn format_percent(percent: Option<f64>) -> String {
    match percent {
        Some(p) => format!("{p:+.1}%"),
        None => "n/a".to_string(),
    }
}

/// Output format for [`render_tables`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
    JsonLines,
}

fn opt_cell(kind: FieldKind, value: Option<f64>, missing: &str) -> String {
    value.map_or_else(|| missing.to_string(), |v| kind.format(v))
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", header.join(" | ")));
    out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
    for row in rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

const AUTOMATED_HEADER: [&str; 8] = [
    "Dataset",
    "Model",
    "ROUGE-1",
    "ROUGE-2",
    "ROUGE-L",
    "ROUGE-Lsum",
    "BERTScore F1",
    "BLEURT",
];
const QUALITY_HEADER: [&str; 10] = [
    "Dataset",
    "Model",
    "Factual Correctness",
    "Completeness",
    "Clinical Relevance",
    "Coherence and Organization",
    "Terminology Accuracy",
    "Readability",
    "Overall Quality",
    "Composite Score",
];
const SAFETY_HEADER: [&str; 8] = [
    "Dataset",
    "Model",
    "No Hallucination",
    "Minor Hallucination",
    "Major Hallucination",
    "No Omission",
    "Minor Omission",
    "Major Omission",
];

fn has_metric_data(a: &Aggregate) -> bool {
    let r = &a.row;
    r.rouge1.is_some()
        || r.rouge2.is_some()
        || r.rouge_l.is_some()
        || r.rouge_lsum.is_some()
        || r.bertscore_f1.is_some()
        || r.bleurt.is_some()
}

fn has_judge_data(a: &Aggregate) -> bool {
    a.row.composite.is_some() || a.safety.total() > 0
}

/// Renders all aggregates as one document in the requested format. Rows are
/// ordered by (dataset, model); metrics print with 3 decimals, Likert means
/// with 2, counts as integers, absent values as an em dash (markdown) or an
/// empty cell (csv).
pub fn render_tables(aggregates: &[Aggregate], format: TableFormat) -> Result<String, ReportError> {
    if aggregates.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let mut sorted: Vec<&Aggregate> = aggregates.iter().collect();
    sorted.sort_by(|a, b| {
        (a.row.dataset.as_str(), a.row.model.as_str())
            .cmp(&(b.row.dataset.as_str(), b.row.model.as_str()))
    });

    match format {
        TableFormat::Markdown => Ok(render_markdown(&sorted)),
        TableFormat::Csv => Ok(render_csv(&sorted)),
        TableFormat::JsonLines => {
            let mut out = String::new();
            for aggregate in sorted {
                out.push_str(&serde_json::to_string(aggregate).expect("aggregate serializes"));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

fn render_markdown(sorted: &[&Aggregate]) -> String {
    use FieldKind::*;
    let mut out = String::from("# Evaluation Results\n");

    if sorted.iter().any(|a| has_metric_data(a)) {
        let rows: Vec<Vec<String>> = sorted
            .iter()
            .map(|a| {
                let r = &a.row;
                alloc::vec![
                    r.dataset.clone(),
                    r.model.clone(),
                    opt_cell(Metric, r.rouge1, "—"),
                    opt_cell(Metric, r.rouge2, "—"),
                    opt_cell(Metric, r.rouge_l, "—"),
                    opt_cell(Metric, r.rouge_lsum, "—"),
                    opt_cell(Metric, r.bertscore_f1, "—"),
                    opt_cell(Metric, r.bleurt, "—"),
                ]
            })
            .collect();
        out.push_str("\n## Automated Evaluation Results\n\n");
        out.push_str(&markdown_table(&AUTOMATED_HEADER, &rows));
    }

    if sorted.iter().any(|a| has_judge_data(a)) {
        let quality_rows: Vec<Vec<String>> = sorted
            .iter()
            .map(|a| {
                let r = &a.row;
                alloc::vec![
                    r.dataset.clone(),
                    r.model.clone(),
                    opt_cell(Likert, r.factual_correctness, "—"),
                    opt_cell(Likert, r.completeness, "—"),
                    opt_cell(Likert, r.clinical_relevance, "—"),
                    opt_cell(Likert, r.coherence_organization, "—"),
                    opt_cell(Likert, r.terminology_accuracy, "—"),
                    opt_cell(Likert, r.readability, "—"),
                    opt_cell(Likert, r.overall_quality, "—"),
                    opt_cell(Likert, r.composite, "—"),
                ]
            })
            .collect();
        out.push_str("\n## Clinical Quality Assessment Results\n\n");
        out.push_str(&markdown_table(&QUALITY_HEADER, &quality_rows));

        let safety_rows: Vec<Vec<String>> = sorted
            .iter()
            .map(|a| {
                alloc::vec![
                    a.row.dataset.clone(),
                    a.row.model.clone(),
                    a.safety.hallucination.no.to_string(),
                    a.safety.hallucination.minor.to_string(),
                    a.safety.hallucination.major.to_string(),
                    a.safety.omission.no.to_string(),
                    a.safety.omission.minor.to_string(),
                    a.safety.omission.major.to_string(),
                ]
            })
            .collect();
        out.push_str("\n## Clinical Safety Metrics\n\n");
        out.push_str(&markdown_table(&SAFETY_HEADER, &safety_rows));
    }

    out
}

fn render_csv(sorted: &[&Aggregate]) -> String {
    use FieldKind::*;
    let mut out = String::from(
        "dataset,model,n,rouge1,rouge2,rougeL,rougeLsum,bertscore_p,bertscore_r,bertscore_f1,\
         bleurt,factual_correctness,completeness,clinical_relevance,coherence_organization,\
         terminology_accuracy,readability,overall_quality,composite,hallucination_no,\
         hallucination_minor,hallucination_major,omission_no,omission_minor,omission_major\n",
    );
    for a in sorted {
        let r = &a.row;
        let cells = [
            csv_escape(&r.dataset),
            csv_escape(&r.model),
            r.n.to_string(),
            opt_cell(Metric, r.rouge1, ""),
            opt_cell(Metric, r.rouge2, ""),
            opt_cell(Metric, r.rouge_l, ""),
            opt_cell(Metric, r.rouge_lsum, ""),
            opt_cell(Metric, r.bertscore_p, ""),
            opt_cell(Metric, r.bertscore_r, ""),
            opt_cell(Metric, r.bertscore_f1, ""),
            opt_cell(Metric, r.bleurt, ""),
            opt_cell(Likert, r.factual_correctness, ""),
            opt_cell(Likert, r.completeness, ""),
            opt_cell(Likert, r.clinical_relevance, ""),
            opt_cell(Likert, r.coherence_organization, ""),
            opt_cell(Likert, r.terminology_accuracy, ""),
            opt_cell(Likert, r.readability, ""),
            opt_cell(Likert, r.overall_quality, ""),
            opt_cell(Likert, r.composite, ""),
            a.safety.hallucination.no.to_string(),
            a.safety.hallucination.minor.to_string(),
            a.safety.hallucination.major.to_string(),
            a.safety.omission.no.to_string(),
            a.safety.omission.minor.to_string(),
            a.safety.omission.major.to_string(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Renders the baseline-vs-treatment comparison as markdown: one delta table
/// plus a percent-change column (`n/a` on zero baselines).
pub fn render_comparison_markdown(cmp: &ComparisonReport) -> String {
    let mut out = format!(
        "# Comparison: {} vs {}\n\n## {}\n\n",
        cmp.baseline_model, cmp.treatment_model, cmp.dataset
    );
    out.push_str(&format!(
        "| Field | {} | {} | Delta | Change |\n|---|---|---|---|---|\n",
        cmp.baseline_model, cmp.treatment_model
    ));
    for d in &cmp.fields {
        let delta = match d.kind {
            FieldKind::Metric => format!("{:+.3}", d.delta),
            FieldKind::Likert => format!("{:+.2}", d.delta),
            FieldKind::Count => format!("{:+.0}", d.delta),
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            d.field,
            d.kind.format(d.baseline),
            d.kind.format(d.treatment),
            delta,
            format_percent(d.percent),
        ));
    }
    out
}

fn svg_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Grouped bar chart (baseline vs treatment per field) as a self-contained
/// SVG document. Identical input renders identical bytes.
pub fn render_chart(cmp: &ComparisonReport, group: MetricGroup) -> Result<String, ReportError> {
    let fields: Vec<&FieldDelta> = cmp
        .fields
        .iter()
        .filter(|d| d.group == Some(group))
        .collect();
    let all_zero = fields
        .iter()
        .all(|d| d.baseline == 0.0 && d.treatment == 0.0);
    if fields.is_empty()
        || (matches!(group, MetricGroup::Hallucination | MetricGroup::Omission) && all_zero)
    {
        return Err(ReportError::EmptyMetricGroup {
            group: group.name(),
        });
    }

    let kind = fields[0].kind;
    let max_value = fields
        .iter()
        .flat_map(|d| [d.baseline, d.treatment])
        .fold(0.0_f64, f64::max);
    let y_max = if max_value > 0.0 {
        max_value * 1.15
    } else {
        1.0
    };

    const MARGIN_LEFT: f64 = 72.0;
    const MARGIN_TOP: f64 = 56.0;
    const MARGIN_BOTTOM: f64 = 88.0;
    const PLOT_HEIGHT: f64 = 280.0;
    const GROUP_WIDTH: f64 = 120.0;
    const BAR_WIDTH: f64 = 38.0;
    const BAR_GAP: f64 = 8.0;

    let width = MARGIN_LEFT + 24.0 + GROUP_WIDTH * fields.len() as f64;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let baseline_fill = "#8c8c8c";
    let treatment_fill = "#2f6fb2";

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "  <title>{}: {}</title>\n",
        svg_escape(&cmp.dataset),
        group.title()
    ));
    svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" font-size=\"16\" font-weight=\"bold\">{} — {}</text>\n",
        MARGIN_LEFT,
        svg_escape(&cmp.dataset),
        group.title()
    ));

    // Y axis with five ticks.
    let axis_bottom = MARGIN_TOP + PLOT_HEIGHT;
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT:.1}\" y1=\"{MARGIN_TOP:.1}\" x2=\"{MARGIN_LEFT:.1}\" y2=\"{axis_bottom:.1}\" stroke=\"#333\"/>\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT:.1}\" y1=\"{axis_bottom:.1}\" x2=\"{:.1}\" y2=\"{axis_bottom:.1}\" stroke=\"#333\"/>\n",
        width - 12.0
    ));
    for tick in 0..=4 {
        let fraction = f64::from(tick) / 4.0;
        let value = y_max * fraction;
        let y = axis_bottom - PLOT_HEIGHT * fraction;
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 4.0,
            kind.format(value)
        ));
        if tick > 0 {
            svg.push_str(&format!(
                "  <line x1=\"{MARGIN_LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
                width - 12.0
            ));
        }
    }

    for (i, d) in fields.iter().enumerate() {
        let group_left = MARGIN_LEFT + 12.0 + GROUP_WIDTH * i as f64;
        let pair_left = group_left + (GROUP_WIDTH - 12.0 - (BAR_WIDTH * 2.0 + BAR_GAP)) / 2.0;
        for (offset, value, fill) in [
            (0.0, d.baseline, baseline_fill),
            (BAR_WIDTH + BAR_GAP, d.treatment, treatment_fill),
        ] {
            let bar_height = PLOT_HEIGHT * (value / y_max);
            let x = pair_left + offset;
            let y = axis_bottom - bar_height;
            svg.push_str(&format!(
                "  <rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{BAR_WIDTH:.1}\" height=\"{bar_height:.1}\" fill=\"{fill}\"/>\n"
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                x + BAR_WIDTH / 2.0,
                y - 4.0,
                kind.format(value)
            ));
        }
        let label_x = group_left + (GROUP_WIDTH - 12.0) / 2.0;
        let label_y = axis_bottom + 16.0;
        svg.push_str(&format!(
            "  <text x=\"{label_x:.1}\" y=\"{label_y:.1}\" font-size=\"11\" text-anchor=\"end\" \
             transform=\"rotate(-25 {label_x:.1} {label_y:.1})\">{}</text>\n",
            svg_escape(d.field)
        ));
    }

    // Legend.
    let legend_x = width - 200.0;
    svg.push_str(&format!(
        "  <rect x=\"{legend_x:.1}\" y=\"34\" width=\"12\" height=\"12\" fill=\"{baseline_fill}\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"44\" font-size=\"12\">{}</text>\n",
        legend_x + 16.0,
        svg_escape(&cmp.baseline_model)
    ));
    svg.push_str(&format!(
        "  <rect x=\"{legend_x:.1}\" y=\"50\" width=\"12\" height=\"12\" fill=\"{treatment_fill}\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"60\" font-size=\"12\">{}</text>\n",
        legend_x + 16.0,
        svg_escape(&cmp.treatment_model)
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::parse_judge_response;
    use alloc::vec;

    fn score_row(id: &str, model: &str, rouge1_f: f64) -> ScoreRow {
        let rouge = RougeScore {
            precision: rouge1_f,
            recall: rouge1_f,
            fmeasure: rouge1_f,
        };
        ScoreRow {
            id: id.to_string(),
            model: model.to_string(),
            rouge1: Some(rouge),
            rouge2: Some(rouge),
            rouge_l: Some(rouge),
            rouge_lsum: Some(rouge),
            bertscore: Some(BertScoreResult {
                precision: 0.9,
                recall: 0.8,
                f1: 0.85,
            }),
            bleurt: None,
        }
    }

    fn judged_row(
        id: &str,
        model: &str,
        hallucination: SeverityCategory,
        omission: SeverityCategory,
    ) -> JudgedRow {
        let assessment = parse_judge_response(
            r#"{"factual_correctness": 3, "completeness": 3, "clinical_relevance": 3,
               "coherence_organization": 3, "terminology_accuracy": 3, "readability": 3,
               "overall_quality": 3, "negation_detection": true,
               "hallucination": "no", "omission": "no", "rationale": "r"}"#,
        )
        .unwrap();
        let mut row = JudgedRow::from_assessment(id.to_string(), model.to_string(), &assessment, 0);
        row.hallucination = hallucination;
        row.omission = omission;
        row
    }

    fn judged_with_distribution(
        model: &str,
        hallucination: (u64, u64, u64),
        omission: (u64, u64, u64),
    ) -> Vec<JudgedRow> {
        let n = hallucination.0 + hallucination.1 + hallucination.2;
        assert_eq!(n, omission.0 + omission.1 + omission.2);
        let pick = |triple: (u64, u64, u64), i: u64| {
            if i < triple.0 {
                SeverityCategory::No
            } else if i < triple.0 + triple.1 {
                SeverityCategory::Minor
            } else {
                SeverityCategory::Major
            }
        };
        (0..n)
            .map(|i| {
                judged_row(
                    &format!("id-{i:04}"),
                    model,
                    pick(hallucination, i),
                    pick(omission, i),
                )
            })
            .collect()
    }

    #[test]
    fn score_row_wire_shape() {
        let row = score_row("a", "m", 0.5);
        let json = serde_json::to_string(&row).unwrap();
        // Pinned wire keys: rouge blocks use p/r/f, bertscore p/r/f1,
        // bleurt is nullable.
        assert!(
            json.starts_with(r#"{"id":"a","model":"m","rouge1":{"p":0.5,"r":0.5,"f":0.5}"#),
            "{json}"
        );
        assert!(json.contains(r#""rougeL":{"p""#));
        assert!(json.contains(r#""rougeLsum":{"p""#));
        assert!(json.contains(r#""bertscore":{"p":0.9,"r":0.8,"f1":0.85}"#));
        assert!(json.ends_with(r#""bleurt":null}"#), "{json}");
        let back: ScoreRow = serde_json::from_str(&json).unwrap();
        assert_eq!(back, row);
    }

    #[test]
    fn judged_row_wire_shape() {
        let row = judged_row("a", "m", SeverityCategory::Minor, SeverityCategory::No);
        let json = serde_json::to_string(&row).unwrap();
        assert!(json.contains(r#""factual_correctness":3"#));
        assert!(json.contains(r#""negation_detection":true"#));
        assert!(json.contains(r#""hallucination":"minor""#));
        assert!(json.contains(r#""omission":"no""#));
        assert!(json.contains(r#""reask_count":0"#));
        let back: JudgedRow = serde_json::from_str(&json).unwrap();
        assert_eq!(back, row);
    }

    #[test]
    fn aggregate_means_simple() {
        let scores = vec![score_row("a", "m", 0.4), score_row("b", "m", 0.6)];
        let out = aggregate(&scores, &[], "ds", "m").unwrap();
        assert_eq!(out.aggregate.row.rouge1, Some(0.5));
        assert_eq!(out.aggregate.row.n, 2);
        assert_eq!(out.aggregate.row.composite, None);
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn aggregate_counts_published_distribution() {
        // ACI base-model row of the safety table: 9/46/85 and 0/33/107.
        let judged = judged_with_distribution("m", (9, 46, 85), (0, 33, 107));
        let out = aggregate(&[], &judged, "ACI Benchmark", "m").unwrap();
        let safety = out.aggregate.safety;
        assert_eq!(
            (
                safety.hallucination.no,
                safety.hallucination.minor,
                safety.hallucination.major
            ),
            (9, 46, 85)
        );
        assert_eq!(
            (
                safety.omission.no,
                safety.omission.minor,
                safety.omission.major
            ),
            (0, 33, 107)
        );
        assert_eq!(safety.hallucination.sum(), 140);
        assert_eq!(safety.omission.sum(), 140);
        assert_eq!(out.aggregate.row.n, 140);
    }

    #[test]
    fn aggregate_empty_input_errors() {
        assert_eq!(
            aggregate(&[], &[], "ds", "m").unwrap_err(),
            ReportError::EmptyInput
        );
    }

    #[test]
    fn aggregate_warns_on_id_mismatch() {
        let scores = vec![score_row("a", "m", 0.5), score_row("orphan", "m", 0.5)];
        let judged = vec![judged_row(
            "a",
            "m",
            SeverityCategory::No,
            SeverityCategory::No,
        )];
        let out = aggregate(&scores, &judged, "ds", "m").unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("orphan"));
        assert_eq!(out.aggregate.row.n, 2);
    }

    #[test]
    fn aggregate_rejects_mixed_models() {
        let scores = vec![score_row("a", "m1", 0.5), score_row("b", "m2", 0.5)];
        assert!(matches!(
            aggregate(&scores, &[], "ds", "m").unwrap_err(),
            ReportError::MixedModels { .. }
        ));
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let mut scores: Vec<ScoreRow> = (0..25)
            .map(|i| score_row(&format!("id{i}"), "m", (i as f64) / 31.0))
            .collect();
        let forward = aggregate(&scores, &[], "ds", "m").unwrap().aggregate;
        scores.reverse();
        scores.swap(3, 11);
        let shuffled = aggregate(&scores, &[], "ds", "m").unwrap().aggregate;
        assert_eq!(forward, shuffled);
    }

    #[test]
    fn percent_change_published_values() {
        let cases = [
            (0.346, 0.496, 43.3), // rouge-1, aci
            (0.363, 0.653, 79.9), // rouge-1, internal
            (3.13, 4.43, 41.5),   // composite, internal
            (85.0, 35.0, -58.8),  // major hallucination, aci
            (33.0, 5.0, -84.8),   // major hallucination, internal
            (107.0, 21.0, -80.4), // major omission, aci
            (71.0, 1.0, -98.6),   // major omission, internal
        ];
        for (baseline, treatment, published) in cases {
            let computed = percent_change(baseline, treatment).unwrap();
            assert!(
                (computed - published).abs() <= 0.5,
                "({baseline}, {treatment}): computed {computed:.2}, published {published}"
            );
        }
    }

    #[test]
    fn percent_change_rounding_artifacts_within_half_point() {
        // Published 92.7% vs 92.4% computed from the table, and 188.5% vs
        // 188.9%: both land inside the documented +/-0.5pp window.
        let rouge2_aci = percent_change(0.118, 0.227).unwrap();
        assert!((rouge2_aci - 92.4).abs() < 0.05);
        assert!((rouge2_aci - 92.7).abs() <= 0.5);
        let rouge2_internal = percent_change(0.135, 0.390).unwrap();
        assert!((rouge2_internal - 188.9).abs() < 0.05);
        assert!((rouge2_internal - 188.5).abs() <= 0.5);
    }

    #[test]
    fn percent_change_zero_baseline_is_absent() {
        assert_eq!(percent_change(0.0, 5.0), None);
        assert_eq!(format_percent(None), "n/a");
        assert_eq!(percent_change(2.0, 2.0), Some(0.0));
    }

    fn sample_aggregates() -> (Aggregate, Aggregate) {
        // Score ids match the `id-NNNN` ids of judged_with_distribution.
        let base_scores: Vec<ScoreRow> = (0..4)
            .map(|i| score_row(&format!("id-{i:04}"), "Base", 0.346))
            .collect();
        let base_judged = judged_with_distribution("Base", (1, 1, 2), (0, 1, 3));
        let base = aggregate(&base_scores, &base_judged, "ACI Benchmark", "Base")
            .unwrap()
            .aggregate;
        let treat_scores: Vec<ScoreRow> = (0..4)
            .map(|i| score_row(&format!("id-{i:04}"), "Tuned", 0.496))
            .collect();
        let treat_judged = judged_with_distribution("Tuned", (2, 1, 1), (1, 2, 1));
        let treatment = aggregate(&treat_scores, &treat_judged, "ACI Benchmark", "Tuned")
            .unwrap()
            .aggregate;
        (base, treatment)
    }

    #[test]
    fn compare_identity_has_zero_deltas() {
        let (base, _) = sample_aggregates();
        let cmp = compare(&base, &base).unwrap();
        assert!(!cmp.fields.is_empty());
        for d in &cmp.fields {
            assert_eq!(d.delta, 0.0, "{}", d.field);
            if d.baseline != 0.0 {
                assert_eq!(d.percent, Some(0.0), "{}", d.field);
            } else {
                assert_eq!(d.percent, None, "{}", d.field);
            }
        }
    }

    #[test]
    fn compare_rejects_dataset_mismatch() {
        let (base, mut treatment) = sample_aggregates();
        treatment.row.dataset = "Internal Eval".to_string();
        assert!(matches!(
            compare(&base, &treatment).unwrap_err(),
            ReportError::DatasetMismatch { .. }
        ));
    }

    #[test]
    fn compare_includes_safety_deltas() {
        let (base, treatment) = sample_aggregates();
        let cmp = compare(&base, &treatment).unwrap();
        let major = cmp
            .fields
            .iter()
            .find(|d| d.field == "Major Hallucination")
            .unwrap();
        assert_eq!(major.baseline, 2.0);
        assert_eq!(major.treatment, 1.0);
        assert_eq!(major.delta, -1.0);
    }

    #[test]
    fn tables_markdown_matches_published_headers() {
        let (base, treatment) = sample_aggregates();
        let md = render_tables(&[base, treatment], TableFormat::Markdown).unwrap();
        assert!(md.contains(
            "| Dataset | Model | ROUGE-1 | ROUGE-2 | ROUGE-L | ROUGE-Lsum | BERTScore F1 | BLEURT |"
        ));
        assert!(md.contains("Clinical Quality Assessment Results"));
        assert!(md.contains("| 0.346 |"));
        assert!(md.contains("Composite Score"));
        assert!(md.contains("No Hallucination | Minor Hallucination | Major Hallucination"));
        // Missing bleurt renders as a dash, not a zero.
        assert!(md.contains("| — |"));
    }

    #[test]
    fn tables_csv_carries_identical_values() {
        let (base, _) = sample_aggregates();
        let csv = render_tables(&[base], TableFormat::Csv).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("dataset,model,n,rouge1,"));
        let row = lines.next().unwrap();
        assert!(row.starts_with("ACI Benchmark,Base,4,0.346,"));
    }

    #[test]
    fn tables_jsonl_round_trips() {
        let (base, treatment) = sample_aggregates();
        let jsonl = render_tables(&[base.clone(), treatment], TableFormat::JsonLines).unwrap();
        let first: Aggregate = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
        assert_eq!(first, base);
    }

    #[test]
    fn tables_render_deterministically_and_order_insensitively() {
        let (base, treatment) = sample_aggregates();
        let a = render_tables(&[base.clone(), treatment.clone()], TableFormat::Markdown).unwrap();
        let b = render_tables(&[treatment, base], TableFormat::Markdown).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tables_empty_input_errors() {
        assert_eq!(
            render_tables(&[], TableFormat::Markdown).unwrap_err(),
            ReportError::EmptyInput
        );
    }

    #[test]
    fn chart_renders_five_automated_groups() {
        let (base, treatment) = sample_aggregates();
        let cmp = compare(&base, &treatment).unwrap();
        let svg = render_chart(&cmp, MetricGroup::Automated).unwrap();
        assert!(svg.starts_with("<svg"));
        for label in [
            "ROUGE-1",
            "ROUGE-2",
            "ROUGE-L",
            "ROUGE-Lsum",
            "BERTScore F1",
        ] {
            assert!(svg.contains(label), "missing {label}");
        }
        assert!(!svg.contains("BLEURT"));
        // Deterministic bytes.
        assert_eq!(svg, render_chart(&cmp, MetricGroup::Automated).unwrap());
    }

    #[test]
    fn chart_renders_severity_groups() {
        let (base, treatment) = sample_aggregates();
        let cmp = compare(&base, &treatment).unwrap();
        let svg = render_chart(&cmp, MetricGroup::Hallucination).unwrap();
        for label in [
            "No Hallucination",
            "Minor Hallucination",
            "Major Hallucination",
        ] {
            assert!(svg.contains(label));
        }
    }

    #[test]
    fn chart_empty_group_errors() {
        let scores = vec![score_row("a", "m", 0.5)];
        let base = aggregate(&scores, &[], "ds", "Base").unwrap().aggregate;
        let treatment = {
            let scores = vec![score_row("a", "m", 0.6)];
            aggregate(&scores, &[], "ds", "Tuned").unwrap().aggregate
        };
        let cmp = compare(&base, &treatment).unwrap();
        assert!(matches!(
            render_chart(&cmp, MetricGroup::Quality).unwrap_err(),
            ReportError::EmptyMetricGroup { group: "quality" }
        ));
        assert!(matches!(
            render_chart(&cmp, MetricGroup::Hallucination).unwrap_err(),
            ReportError::EmptyMetricGroup {
                group: "hallucination"
            }
        ));
    }
}
