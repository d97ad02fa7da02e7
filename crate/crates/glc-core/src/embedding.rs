//! Token- and utterance-level vector representations.
//!
//! Token vectors come from a pluggable provider instead of a neural encoder:
//! either deterministic signed feature hashing scaled by corpus idf, or an
//! external lookup table of pre-computed vectors. Utterance vectors are the
//! arithmetic mean of the token vectors in each utterance span.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use crate::error::{GlcError, Result};
use crate::matrix::Matrix;
use crate::tokenize::TokenizedDialogue;

/// What to do when the external table has no entry for a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingTokenPolicy {
    /// Fail, naming the token.
    #[default]
    Error,
    /// Substitute the zero vector.
    Zero,
}

/// Signed feature hashing scaled by inverse document frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedTfidf {
    pub dimension: usize,
    pub seed: u64,
    /// token -> idf over the build corpus; tokens absent here use
    /// `unseen_idf` (the idf formula evaluated at document frequency 0).
    pub idf: BTreeMap<String, f64>,
    pub unseen_idf: f64,
}

/// Token -> vector lookup loaded from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalTable {
    pub dimension: usize,
    pub table: BTreeMap<String, Vec<f64>>,
    pub missing_policy: MissingTokenPolicy,
}

/// Source of token vectors. Both variants are context-free: a token always
/// maps to the same vector regardless of position.
#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingProvider {
    HashedTfidf(HashedTfidf),
    ExternalTable(ExternalTable),
}

impl EmbeddingProvider {
    pub fn dimension(&self) -> usize {
        match self {
            EmbeddingProvider::HashedTfidf(h) => h.dimension,
            EmbeddingProvider::ExternalTable(t) => t.dimension,
        }
    }

    /// Vector for one token; always `dimension()` finite components.
    pub fn embed(&self, token: &str) -> Result<Vec<f64>> {
        match self {
            EmbeddingProvider::HashedTfidf(h) => {
                let idf = h.idf.get(token).copied().unwrap_or(h.unseen_idf);
                let mut v = hashed_unit_vector(token, h.dimension, h.seed);
                for x in &mut v {
                    *x *= idf;
                }
                Ok(v)
            }
            EmbeddingProvider::ExternalTable(t) => match t.table.get(token) {
                Some(v) => Ok(v.clone()),
                None => match t.missing_policy {
                    MissingTokenPolicy::Error => Err(GlcError::MissingToken(token.to_string())),
                    MissingTokenPolicy::Zero => Ok(vec![0.0; t.dimension]),
                },
            },
        }
    }
}

/// 64-bit FNV-1a over the token bytes, with the seed folded into the offset
/// basis. Fixed constants keep the hash identical across runs and platforms.
fn fnv1a64(bytes: &[u8], seed: u64) -> u64 {
    const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET_BASIS ^ seed;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

const SIGN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One-hot signed vector for a token: bucket = first hash mod dimension,
/// sign = parity of a second, independently salted hash. This is the hashed
/// embedding before idf scaling.
pub fn hashed_unit_vector(token: &str, dimension: usize, seed: u64) -> Vec<f64> {
    let bucket = (fnv1a64(token.as_bytes(), seed) % dimension as u64) as usize;
    let sign = if fnv1a64(token.as_bytes(), seed ^ SIGN_SALT) & 1 == 0 {
        1.0
    } else {
        -1.0
    };
    let mut v = vec![0.0; dimension];
    v[bucket] = sign;
    v
}

/// Smoothed idf: `ln((1 + docs) / (1 + df)) + 1`.
fn idf_value(corpus_size: usize, document_frequency: usize) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + document_frequency as f64)).ln() + 1.0
}

/// Build a hashed-tfidf provider over a tokenized corpus. The document
/// frequency of a token is the number of dialogues containing it.
pub fn build_hashed_embedder(
    corpus: &[TokenizedDialogue],
    dimension: usize,
    seed: u64,
) -> Result<EmbeddingProvider> {
    if dimension < 2 {
        return Err(GlcError::config(format!(
            "hashed embedder dimension must be at least 2, got {dimension}"
        )));
    }
    if corpus.is_empty() {
        return Err(GlcError::validation("hashed embedder needs a non-empty corpus"));
    }
    let mut document_frequency: BTreeMap<String, usize> = BTreeMap::new();
    for dialogue in corpus {
        let unique: BTreeSet<&String> = dialogue.tokens.iter().collect();
        for token in unique {
            *document_frequency.entry(token.clone()).or_insert(0) += 1;
        }
    }
    let corpus_size = corpus.len();
    let idf = document_frequency
        .into_iter()
        .map(|(token, df)| (token, idf_value(corpus_size, df)))
        .collect();
    Ok(EmbeddingProvider::HashedTfidf(HashedTfidf {
        dimension,
        seed,
        idf,
        unseen_idf: idf_value(corpus_size, 0),
    }))
}

/// Load an external vector table: one `token v_1 .. v_d` entry per line,
/// single-space separated; `#` lines are comments. The dimension is inferred
/// from the first entry.
pub fn load_external_vectors(path: &Path, missing_policy: MissingTokenPolicy) -> Result<EmbeddingProvider> {
    let file = std::fs::File::open(path)?;
    read_external_vectors(std::io::BufReader::new(file), missing_policy)
}

/// [`load_external_vectors`] over any reader, for tests and in-memory tables.
pub fn read_external_vectors<R: BufRead>(
    reader: R,
    missing_policy: MissingTokenPolicy,
) -> Result<EmbeddingProvider> {
    let mut table: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut dimension: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split(' ');
        let token = parts
            .next()
            .ok_or_else(|| GlcError::format(format!("line {line_no}: empty entry")))?
            .to_string();
        let values = parts
            .map(|p| {
                p.parse::<f64>().map_err(|e| {
                    GlcError::format(format!("line {line_no}: bad component {p:?}: {e}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(GlcError::format(format!(
                "line {line_no}: entry {token:?} has no vector components"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GlcError::format(format!(
                "line {line_no}: entry {token:?} has a non-finite component"
            )));
        }
        match dimension {
            None => dimension = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(GlcError::format(format!(
                    "line {line_no}: entry {token:?} has {} components, expected {d}",
                    values.len()
                )))
            }
            Some(_) => {}
        }
        if table.insert(token.clone(), values).is_some() {
            return Err(GlcError::format(format!(
                "line {line_no}: duplicate entry for token {token:?}"
            )));
        }
    }
    let dimension =
        dimension.ok_or_else(|| GlcError::format("vector table contains no entries"))?;
    Ok(EmbeddingProvider::ExternalTable(ExternalTable {
        dimension,
        table,
        missing_policy,
    }))
}

/// Per-token vectors: row `t` is the representation of token `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    pub matrix: Matrix,
}

/// Per-utterance vectors: row order follows the span order of the source
/// tokenized dialogue (prompt first when attached).
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceEmbeddings {
    pub matrix: Matrix,
}

/// Embed every token of `tokenized` through `provider`.
pub fn embed_tokens(
    tokenized: &TokenizedDialogue,
    provider: &EmbeddingProvider,
) -> Result<TokenEmbeddings> {
    let d = provider.dimension();
    let mut data = Vec::with_capacity(tokenized.tokens.len() * d);
    for token in &tokenized.tokens {
        data.extend(provider.embed(token)?);
    }
    Ok(TokenEmbeddings {
        matrix: Matrix::from_flat(tokenized.tokens.len(), d, data)?,
    })
}

/// Mean of the token vectors in each utterance span.
pub fn average_utterances(
    tokens: &TokenEmbeddings,
    tokenized: &TokenizedDialogue,
) -> Result<UtteranceEmbeddings> {
    if tokens.matrix.rows() != tokenized.token_count() {
        return Err(GlcError::validation(format!(
            "token embedding rows ({}) do not match token count ({})",
            tokens.matrix.rows(),
            tokenized.token_count()
        )));
    }
    let d = tokens.matrix.cols();
    let mut out = Matrix::zeros(tokenized.spans.len(), d);
    for (i, span) in tokenized.spans.iter().enumerate() {
        if span.len == 0 {
            return Err(GlcError::validation(format!(
                "utterance {} has an empty token span",
                span.utterance_index
            )));
        }
        let row = out.row_mut(i);
        for t in span.range() {
            for (acc, v) in row.iter_mut().zip(tokens.matrix.row(t)) {
                *acc += v;
            }
        }
        let inv = 1.0 / span.len as f64;
        for acc in row.iter_mut() {
            *acc *= inv;
        }
    }
    Ok(UtteranceEmbeddings { matrix: out })
}
