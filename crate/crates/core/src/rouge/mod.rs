//! From-scratch ROUGE-1/2/L/Lsum with an explicit tokenizer.
//!
//! Tokens are maximal runs of alphanumeric characters, lowercased by default,
//! with optional Porter stemming. ROUGE-N counts clipped n-gram overlap,
//! ROUGE-L uses the longest common subsequence over whole texts, and
//! ROUGE-Lsum is the summary-level variant: per-reference-sentence union LCS
//! with token budgets clipped on both sides.

mod porter;

pub use porter::stem;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Ordered token strings, as produced by [`tokenize`].
pub type TokenSeq = Vec<String>;

/// How texts are split into sentences for ROUGE-Lsum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceSplit {
    Newline,
    NewlineOrPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RougeConfig {
    pub lowercase: bool,
    pub use_stemmer: bool,
    pub sentence_split: SentenceSplit,
}

impl Default for RougeConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            use_stemmer: false,
            sentence_split: SentenceSplit::NewlineOrPeriod,
        }
    }
}

/// Precision/recall/F1 for one ROUGE variant. Wire names are `p`/`r`/`f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    #[serde(rename = "f")]
    pub fmeasure: f64,
}

impl RougeScore {
    pub const ZERO: Self = Self {
        precision: 0.0,
        recall: 0.0,
        fmeasure: 0.0,
    };

    fn from_pr(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            fmeasure: fmeasure(precision, recall),
        }
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn fmeasure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Lowercases (when configured), splits on maximal runs of non-alphanumeric
/// characters, drops empties, and optionally stems each token.
pub fn tokenize(text: &str, config: &RougeConfig) -> TokenSeq {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if config.lowercase {
                for low in ch.to_lowercase() {
                    current.push(low);
                }
            } else {
                current.push(ch);
            }
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    if config.use_stemmer {
        for token in &mut tokens {
            *token = stem(token);
        }
    }
    tokens
}

/// Sentence boundaries: newline always; a period followed by whitespace when
/// the mode asks for it. The period stays with its sentence.
pub fn split_sentences(text: &str, mode: SentenceSplit) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\n' => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            b'.' if mode == SentenceSplit::NewlineOrPeriod
                && bytes.get(i + 1).is_some_and(|b| b.is_ascii_whitespace()) =>
            {
                out.push(&text[start..=i]);
                start = i + 1;
            }
            _ => {}
        }
        i += 1;
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], u64> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram overlap. Either side lacking n-grams scores 0.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> RougeScore {
    assert!(n >= 1, "rouge_n requires n >= 1");
    if candidate.len() < n || reference.len() < n {
        return RougeScore::ZERO;
    }
    let cand_counts = ngram_counts(candidate, n);
    let ref_counts = ngram_counts(reference, n);
    let overlap: u64 = cand_counts
        .iter()
        .map(|(gram, count)| (*count).min(*ref_counts.get(gram).unwrap_or(&0)))
        .sum();
    let cand_total = (candidate.len() - n + 1) as f64;
    let ref_total = (reference.len() - n + 1) as f64;
    RougeScore::from_pr(overlap as f64 / cand_total, overlap as f64 / ref_total)
}

// Space-efficient LCS length (two rolling rows).
fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = alloc::vec![0usize; b.len() + 1];
    let mut row = alloc::vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            row[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                row[j].max(prev[j + 1])
            };
        }
        core::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// Longest-common-subsequence ROUGE over whole token sequences.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> RougeScore {
    if candidate.is_empty() || reference.is_empty() {
        return RougeScore::ZERO;
    }
    let lcs = lcs_length(candidate, reference) as f64;
    RougeScore::from_pr(lcs / candidate.len() as f64, lcs / reference.len() as f64)
}

// Indices of `reference` tokens participating in one LCS with `other`.
fn lcs_indices(reference: &[String], other: &[String]) -> Vec<usize> {
    let n = reference.len();
    let m = other.len();
    let mut table = alloc::vec![alloc::vec![0usize; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            table[i][j] = if reference[i - 1] == other[j - 1] {
                table[i - 1][j - 1] + 1
            } else {
                table[i - 1][j].max(table[i][j - 1])
            };
        }
    }
    let mut indices = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if reference[i - 1] == other[j - 1] {
            indices.push(i - 1);
            i -= 1;
            j -= 1;
        } else if table[i][j - 1] > table[i - 1][j] {
            j -= 1;
        } else {
            i -= 1;
        }
    }
    indices.reverse();
    indices
}

/// Summary-level ROUGE-L: for each reference sentence, the union of its LCS
/// positions against every candidate sentence; hits clipped against the
/// remaining per-token budgets of both sides.
pub fn rouge_lsum(candidate: &str, reference: &str, config: &RougeConfig) -> RougeScore {
    let cand_sentences: Vec<TokenSeq> = split_sentences(candidate, config.sentence_split)
        .into_iter()
        .map(|s| tokenize(s, config))
        .filter(|t| !t.is_empty())
        .collect();
    let ref_sentences: Vec<TokenSeq> = split_sentences(reference, config.sentence_split)
        .into_iter()
        .map(|s| tokenize(s, config))
        .filter(|t| !t.is_empty())
        .collect();

    let cand_total: usize = cand_sentences.iter().map(Vec::len).sum();
    let ref_total: usize = ref_sentences.iter().map(Vec::len).sum();
    if cand_total == 0 || ref_total == 0 {
        return RougeScore::ZERO;
    }

    let mut cand_budget: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in &cand_sentences {
        for token in sentence {
            *cand_budget.entry(token).or_insert(0) += 1;
        }
    }
    let mut ref_budget: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in &ref_sentences {
        for token in sentence {
            *ref_budget.entry(token).or_insert(0) += 1;
        }
    }

    let mut hits = 0u64;
    for ref_sentence in &ref_sentences {
        let mut union: BTreeSet<usize> = BTreeSet::new();
        for cand_sentence in &cand_sentences {
            union.extend(lcs_indices(ref_sentence, cand_sentence));
        }
        for index in union {
            let token = ref_sentence[index].as_str();
            if let Some(cand_left) = cand_budget.get_mut(token)
                && *cand_left > 0
            {
                let ref_left = ref_budget
                    .get_mut(token)
                    .expect("token came from reference");
                if *ref_left > 0 {
                    hits += 1;
                    *cand_left -= 1;
                    *ref_left -= 1;
                }
            }
        }
    }

    RougeScore::from_pr(
        hits as f64 / cand_total as f64,
        hits as f64 / ref_total as f64,
    )
}

/// All four ROUGE variants for one candidate/reference text pair. Wire names
/// are `rouge1`, `rouge2`, `rougeL`, `rougeLsum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeSuite {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
    #[serde(rename = "rougeLsum")]
    pub rouge_lsum: RougeScore,
}

pub fn rouge_suite(candidate: &str, reference: &str, config: &RougeConfig) -> RougeSuite {
    let cand_tokens = tokenize(candidate, config);
    let ref_tokens = tokenize(reference, config);
    RougeSuite {
        rouge1: rouge_n(&cand_tokens, &ref_tokens, 1),
        rouge2: rouge_n(&cand_tokens, &ref_tokens, 2),
        rouge_l: rouge_l(&cand_tokens, &ref_tokens),
        rouge_lsum: rouge_lsum(candidate, reference, config),
    }
}
