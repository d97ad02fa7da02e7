//! Global and local degree centrality over sub-topics and utterances.
//!
//! Both levels view their vectors as nodes of a fully-connected graph whose
//! edge values are dot products (cosine is available as a non-default
//! variant). The global score of a sub-topic center sums its edges to every
//! center, self edge included; the local score of an utterance sums its edges
//! to every member of its own cluster. Each raw score vector is divided by
//! its L2 norm — per cluster for the local level — and the per-utterance
//! weight is the product of its normalized local score and its cluster's
//! normalized global score.
//!
//! Degenerate norms (antipodal or all-zero vectors) fall back to a uniform
//! score vector with an explicit flag instead of propagating NaN.

use crate::clustering::ClusterModel;
use crate::embedding::UtteranceEmbeddings;
use crate::error::{GlcError, Result};
use crate::matrix::{dot, norm, Matrix};

/// Norms at or below this are treated as degenerate and trigger the uniform
/// fallback.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// Edge value between two nodes of the centrality graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeSimilarity {
    /// Raw dot product, as the centrality sums are written.
    #[default]
    Dot,
    /// Cosine similarity variant (zero-norm vectors contribute zero edges).
    Cosine,
}

/// How local scores are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationScope {
    /// Each cluster's member sub-vector is normalized on its own.
    #[default]
    PerCluster,
    /// One norm over all utterances, for ablation.
    PerDialogue,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CentralityConfig {
    pub scope: NormalizationScope,
    pub similarity: EdgeSimilarity,
}

fn edge(a: &[f64], b: &[f64], similarity: EdgeSimilarity) -> f64 {
    match similarity {
        EdgeSimilarity::Dot => dot(a, b),
        EdgeSimilarity::Cosine => {
            let na = norm(a);
            let nb = norm(b);
            if na <= DEGENERATE_NORM || nb <= DEGENERATE_NORM {
                0.0
            } else {
                dot(a, b) / (na * nb)
            }
        }
    }
}

/// Divide `raw` by its L2 norm in place; on a degenerate norm substitute the
/// uniform vector `1/sqrt(len)` and report it.
fn normalize_or_uniform(raw: &mut [f64]) -> bool {
    let n = norm(raw);
    if n <= DEGENERATE_NORM {
        let uniform = 1.0 / (raw.len() as f64).sqrt();
        raw.fill(uniform);
        true
    } else {
        for v in raw.iter_mut() {
            *v /= n;
        }
        false
    }
}

/// Normalized importance of each sub-topic center. Returns the score vector
/// and whether the degenerate fallback fired.
pub fn global_centrality(centers: &Matrix) -> Result<(Vec<f64>, bool)> {
    global_centrality_with(centers, EdgeSimilarity::Dot)
}

pub fn global_centrality_with(
    centers: &Matrix,
    similarity: EdgeSimilarity,
) -> Result<(Vec<f64>, bool)> {
    if centers.is_empty() {
        return Err(GlcError::validation("global centrality needs at least one center"));
    }
    if !centers.is_finite() {
        return Err(GlcError::validation("centers contain non-finite entries"));
    }
    let k = centers.rows();
    let mut raw = vec![0.0; k];
    for (i, score) in raw.iter_mut().enumerate() {
        for j in 0..k {
            *score += edge(centers.row(i), centers.row(j), similarity);
        }
    }
    let fallback = normalize_or_uniform(&mut raw);
    Ok((raw, fallback))
}

/// Normalized importance of each utterance within its own cluster. Returns
/// per-utterance scores (aligned with the embedding rows) and a per-cluster
/// fallback flag vector.
pub fn local_centrality(
    utterances: &UtteranceEmbeddings,
    model: &ClusterModel,
) -> Result<(Vec<f64>, Vec<bool>)> {
    local_centrality_with(utterances, model, CentralityConfig::default())
}

pub fn local_centrality_with(
    utterances: &UtteranceEmbeddings,
    model: &ClusterModel,
    config: CentralityConfig,
) -> Result<(Vec<f64>, Vec<bool>)> {
    model.validate_against(utterances)?;
    let points = &utterances.matrix;
    let mut scores = vec![0.0; points.rows()];
    for members in &model.members {
        for &i in members {
            let mut raw = 0.0;
            for &j in members {
                raw += edge(points.row(i), points.row(j), config.similarity);
            }
            scores[i] = raw;
        }
    }

    let k = model.cluster_count();
    let mut fallbacks = vec![false; k];
    match config.scope {
        NormalizationScope::PerCluster => {
            for (c, members) in model.members.iter().enumerate() {
                let mut sub: Vec<f64> = members.iter().map(|&i| scores[i]).collect();
                fallbacks[c] = normalize_or_uniform(&mut sub);
                for (&i, v) in members.iter().zip(&sub) {
                    scores[i] = *v;
                }
            }
        }
        NormalizationScope::PerDialogue => {
            let degenerate = normalize_or_uniform(&mut scores);
            if degenerate {
                fallbacks.fill(true);
            }
        }
    }
    Ok((scores, fallbacks))
}

/// Per-utterance weight: normalized local score times the cluster's
/// normalized global score.
pub fn glc_weights(
    global_scores: &[f64],
    local_scores: &[f64],
    model: &ClusterModel,
) -> Result<Vec<f64>> {
    if global_scores.len() != model.cluster_count() {
        return Err(GlcError::validation(format!(
            "global score count ({}) does not match cluster count ({})",
            global_scores.len(),
            model.cluster_count()
        )));
    }
    if local_scores.len() != model.assignments.len() {
        return Err(GlcError::validation(format!(
            "local score count ({}) does not match assignment count ({})",
            local_scores.len(),
            model.assignments.len()
        )));
    }
    Ok(local_scores
        .iter()
        .zip(&model.assignments)
        .map(|(local, &cluster)| local * global_scores[cluster])
        .collect())
}

/// All centrality outputs for one dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcScores {
    /// Normalized global score per surviving cluster.
    pub global_scores: Vec<f64>,
    /// Normalized local score per utterance row.
    pub local_scores: Vec<f64>,
    /// Product weight per utterance row.
    pub weights: Vec<f64>,
    pub global_fallback: bool,
    /// Per-cluster local fallback flags.
    pub local_fallbacks: Vec<bool>,
}

impl GlcScores {
    pub fn compute(
        utterances: &UtteranceEmbeddings,
        model: &ClusterModel,
        config: CentralityConfig,
    ) -> Result<GlcScores> {
        let (global_scores, global_fallback) =
            global_centrality_with(&model.centers, config.similarity)?;
        let (local_scores, local_fallbacks) = local_centrality_with(utterances, model, config)?;
        let weights = glc_weights(&global_scores, &local_scores, model)?;
        Ok(GlcScores {
            global_scores,
            local_scores,
            weights,
            global_fallback,
            local_fallbacks,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.global_scores.iter().all(|v| v.is_finite())
            && self.local_scores.iter().all(|v| v.is_finite())
            && self.weights.iter().all(|v| v.is_finite())
    }
}
