//! Lexical overlap metrics: ROUGE-1/2/L, BLEU, and the novel n-gram ratio.
//!
//! All metrics operate on pre-tokenized text and return values in [0, 1].
//! They are implemented from their standard definitions for fixture-level
//! regression, not for comparison with any published leaderboard numbers.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

/// Precision / recall / F1 triple.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OverlapScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl OverlapScore {
    fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        OverlapScore {
            precision,
            recall,
            f1,
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// ROUGE-N: n-gram overlap clipped by the reference counts.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> OverlapScore {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refs.values().sum();
    if cand_total == 0 || ref_total == 0 {
        return OverlapScore::default();
    }
    let overlap: usize = cand
        .iter()
        .map(|(gram, &count)| count.min(refs.get(gram).copied().unwrap_or(0)))
        .sum();
    OverlapScore::from_pr(
        overlap as f64 / cand_total as f64,
        overlap as f64 / ref_total as f64,
    )
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// ROUGE-L: longest common subsequence overlap.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> OverlapScore {
    if candidate.is_empty() || reference.is_empty() {
        return OverlapScore::default();
    }
    let lcs = lcs_length(candidate, reference) as f64;
    OverlapScore::from_pr(lcs / candidate.len() as f64, lcs / reference.len() as f64)
}

/// BLEU with a single reference: geometric mean of clipped n-gram precisions
/// for n = 1..=max_n, add-1 smoothed on zero counts for n >= 2, times the
/// brevity penalty `min(1, exp(1 - |ref| / |cand|))`.
pub fn bleu(candidate: &[String], reference: &[String], max_n: usize) -> f64 {
    assert!(max_n >= 1, "bleu needs max_n >= 1");
    if candidate.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let total: usize = cand.values().sum();
        let matched: usize = cand
            .iter()
            .map(|(gram, &count)| count.min(refs.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if matched > 0 {
            matched as f64 / total as f64
        } else if n >= 2 {
            // Zero-count smoothing; also covers candidates shorter than n,
            // where no n-grams exist at all.
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        } else {
            return 0.0;
        };
        log_sum += precision.ln();
    }
    let geometric_mean = (log_sum / max_n as f64).exp();
    let brevity = if reference.len() <= candidate.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / candidate.len() as f64).exp()
    };
    geometric_mean * brevity
}

/// Fraction of summary n-grams (counted per occurrence) absent from the
/// source's n-gram set; 0 when the summary has fewer than n tokens.
pub fn novel_ngram_ratio(summary: &[String], source: &[String], n: usize) -> f64 {
    let (novel, total) = novel_ngram_counts(summary, source, n);
    if total == 0 {
        0.0
    } else {
        novel as f64 / total as f64
    }
}

/// (novel, total) n-gram occurrence counts of `summary` against `source`.
pub fn novel_ngram_counts(summary: &[String], source: &[String], n: usize) -> (usize, usize) {
    if n == 0 || summary.len() < n {
        return (0, 0);
    }
    let seen: HashSet<&[String]> = if source.len() < n {
        HashSet::new()
    } else {
        source.windows(n).collect()
    };
    let mut novel = 0;
    let mut total = 0;
    for gram in summary.windows(n) {
        total += 1;
        if !seen.contains(gram) {
            novel += 1;
        }
    }
    (novel, total)
}

/// Scores of one summary against its reference and source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
    pub bleu: f64,
    /// n -> novel n-gram ratio of the summary against the dialogue itself.
    pub novel_ngram_ratio: BTreeMap<usize, f64>,
}
