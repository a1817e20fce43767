//! BERTScore greedy matching over token embeddings, optional IDF weighting,
//! and the deterministic one-hot mock backend used for testing and offline
//! runs. Fetching embeddings from a real service lives in the companion
//! crate; this module only does the math.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rouge::{self, RougeConfig};

/// Per-token embedding vectors, index-aligned with `tokens`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
}

impl TokenEmbeddings {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, EmbeddingError> {
        if tokens.len() != vectors.len() {
            return Err(EmbeddingError::Misaligned {
                tokens: tokens.len(),
                vectors: vectors.len(),
            });
        }
        let dim = vectors.first().map_or(0, Vec::len);
        if let Some(bad) = vectors.iter().position(|v| v.len() != dim) {
            return Err(EmbeddingError::RaggedVector {
                index: bad,
                expected: dim,
            });
        }
        Ok(Self {
            tokens,
            vectors,
            dim,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Precision/recall/F1 from greedy matching. Wire names are `p`/`r`/`f1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BertScoreResult {
    #[serde(rename = "p")]
    pub precision: f64,
    #[serde(rename = "r")]
    pub recall: f64,
    pub f1: f64,
}

impl BertScoreResult {
    pub const ZERO: Self = Self {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("{tokens} tokens but {vectors} vectors")]
    Misaligned { tokens: usize, vectors: usize },
    #[error("vector {index} does not have the common dimension {expected}")]
    RaggedVector { index: usize, expected: usize },
    #[error("candidate dimension {candidate} != reference dimension {reference}")]
    DimensionMismatch { candidate: usize, reference: usize },
    #[error("idf corpus is empty")]
    EmptyCorpus,
}

/// Token -> idf weight, with a default for unseen tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    weights: BTreeMap<String, f64>,
    pub default_weight: f64,
}

impl IdfTable {
    pub fn weight(&self, token: &str) -> f64 {
        self.weights
            .get(token)
            .copied()
            .unwrap_or(self.default_weight)
    }
}

/// idf(t) = ln((N + 1) / (df + 1)); unseen tokens weigh ln(N + 1).
pub fn build_idf<'a, I>(
    reference_corpus: I,
    config: &RougeConfig,
) -> Result<IdfTable, EmbeddingError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut doc_freq: BTreeMap<String, u64> = BTreeMap::new();
    let mut docs = 0u64;
    for text in reference_corpus {
        docs += 1;
        let distinct: BTreeSet<String> = rouge::tokenize(text, config).into_iter().collect();
        for token in distinct {
            *doc_freq.entry(token).or_insert(0) += 1;
        }
    }
    if docs == 0 {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let n = docs as f64;
    let weights = doc_freq
        .into_iter()
        .map(|(token, df)| (token, libm::log((n + 1.0) / (df as f64 + 1.0))))
        .collect();
    Ok(IdfTable {
        weights,
        default_weight: libm::log(n + 1.0),
    })
}

/// Cosine similarity; any zero vector yields 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        dot / (libm::sqrt(norm_a) * libm::sqrt(norm_b))
    }
}

fn directed_score(from: &TokenEmbeddings, to: &TokenEmbeddings, idf: Option<&IdfTable>) -> f64 {
    let mut weighted = 0.0;
    let mut weight_sum = 0.0;
    for (token, vector) in from.tokens.iter().zip(&from.vectors) {
        let weight = idf.map_or(1.0, |table| table.weight(token));
        let best = to
            .vectors
            .iter()
            .map(|other| cosine(vector, other))
            .fold(f64::MIN, f64::max);
        weighted += weight * best;
        weight_sum += weight;
    }
    if weight_sum == 0.0 {
        0.0
    } else {
        weighted / weight_sum
    }
}

/// Greedy BERTScore matching: precision matches each candidate token to its
/// best reference token, recall the reverse; F1 is the harmonic mean. Empty
/// sides score 0.
pub fn greedy_match(
    candidate: &TokenEmbeddings,
    reference: &TokenEmbeddings,
    idf: Option<&IdfTable>,
) -> Result<BertScoreResult, EmbeddingError> {
    if candidate.is_empty() || reference.is_empty() {
        return Ok(BertScoreResult::ZERO);
    }
    if candidate.dim != reference.dim {
        return Err(EmbeddingError::DimensionMismatch {
            candidate: candidate.dim,
            reference: reference.dim,
        });
    }
    let precision = directed_score(candidate, reference, idf);
    let recall = directed_score(reference, candidate, idf);
    Ok(BertScoreResult {
        precision,
        recall,
        f1: rouge::fmeasure(precision, recall),
    })
}

fn one_hot_vectors(tokens: &[String], vocab: &BTreeMap<&str, usize>, dim: usize) -> Vec<Vec<f64>> {
    tokens
        .iter()
        .map(|token| {
            let mut v = alloc::vec![0.0; dim];
            v[vocab[token.as_str()]] = 1.0;
            v
        })
        .collect()
}

fn assign_vocab<'a>(token_lists: &[&'a [String]]) -> BTreeMap<&'a str, usize> {
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for tokens in token_lists {
        for token in *tokens {
            let next = vocab.len();
            vocab.entry(token.as_str()).or_insert(next);
        }
    }
    vocab
}

/// Mock backend: each distinct token type becomes a distinct standard basis
/// vector, assigned in order of first appearance within this text.
pub fn one_hot_embeddings(text: &str, config: &RougeConfig) -> TokenEmbeddings {
    let tokens = rouge::tokenize(text, config);
    let vocab = assign_vocab(&[&tokens]);
    let dim = vocab.len();
    let vectors = one_hot_vectors(&tokens, &vocab, dim);
    TokenEmbeddings {
        dim,
        vectors,
        tokens,
    }
}

/// Mock backend over a pair: one shared basis assignment across both texts,
/// so the two sides are comparable.
pub fn one_hot_pair(
    candidate: &str,
    reference: &str,
    config: &RougeConfig,
) -> (TokenEmbeddings, TokenEmbeddings) {
    let cand_tokens = rouge::tokenize(candidate, config);
    let ref_tokens = rouge::tokenize(reference, config);
    let vocab = assign_vocab(&[&cand_tokens, &ref_tokens]);
    let dim = vocab.len();
    let cand_vectors = one_hot_vectors(&cand_tokens, &vocab, dim);
    let ref_vectors = one_hot_vectors(&ref_tokens, &vocab, dim);
    (
        TokenEmbeddings {
            dim,
            vectors: cand_vectors,
            tokens: cand_tokens,
        },
        TokenEmbeddings {
            dim,
            vectors: ref_vectors,
            tokens: ref_tokens,
        },
    )
}

/// Score a text pair with the one-hot mock backend.
pub fn score_pair_one_hot(
    candidate: &str,
    reference: &str,
    config: &RougeConfig,
    idf: Option<&IdfTable>,
) -> BertScoreResult {
    let (cand, refr) = one_hot_pair(candidate, reference, config);
    greedy_match(&cand, &refr, idf).expect("one-hot pair shares a dimension")
}
