//! Sub-topic discovery by over-provisioned K-Means.
//!
//! K is set to the number of utterance vectors and the centers are
//! initialized at the vectors themselves, so the surviving cluster count
//! emerges from the data: coincident utterances starve all but the
//! lowest-indexed duplicate center, and centers left without members after
//! convergence are dropped. A k-means++-style initialization is kept behind
//! a config switch for ablation runs; it is the only place the seed matters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::UtteranceEmbeddings;
use crate::error::{GlcError, Result};
use crate::matrix::{squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMethod {
    /// Centers start at the input vectors, in input order. Deterministic and
    /// seed-independent; Lloyd is already at a fixed point, so cluster
    /// structure reduces to coincidence of the inputs.
    #[default]
    DataPoints,
    /// Seeded k-means++-style spreading, for ablation only.
    KMeansPlusPlus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    pub init: InitMethod,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            init: InitMethod::DataPoints,
            max_iters: 50,
            tol: 1e-6,
            seed: 0,
        }
    }
}

/// Fitted sub-topic model: surviving centers (every one has at least one
/// member), per-utterance assignments, and the member lists per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centers: Matrix,
    pub assignments: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    pub seed: u64,
    pub iterations_run: usize,
    /// Within-cluster sum of squared distances after each assignment step.
    pub objective_log: Vec<f64>,
}

impl ClusterModel {
    pub fn cluster_count(&self) -> usize {
        self.centers.rows()
    }

    pub(crate) fn validate_against(&self, utterances: &UtteranceEmbeddings) -> Result<()> {
        if self.assignments.len() != utterances.matrix.rows() {
            return Err(GlcError::validation(format!(
                "cluster assignments ({}) do not cover the {} utterance vectors",
                self.assignments.len(),
                utterances.matrix.rows()
            )));
        }
        if let Some(&bad) = self.assignments.iter().find(|a| **a >= self.cluster_count()) {
            return Err(GlcError::validation(format!(
                "assignment index {bad} out of range for {} clusters",
                self.cluster_count()
            )));
        }
        Ok(())
    }
}

/// Index of the nearest center (squared Euclidean) for each query vector;
/// ties go to the lowest center index.
pub fn assign_nearest(vectors: &Matrix, centers: &Matrix) -> Result<Vec<usize>> {
    if centers.is_empty() {
        return Err(GlcError::validation("assign_nearest needs at least one center"));
    }
    if vectors.cols() != centers.cols() {
        return Err(GlcError::validation(format!(
            "dimension mismatch: vectors are {}-d, centers are {}-d",
            vectors.cols(),
            centers.cols()
        )));
    }
    Ok(vectors
        .iter_rows()
        .map(|v| nearest_center(v, centers).0)
        .collect())
}

fn nearest_center(vector: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0, squared_distance(vector, centers.row(0)));
    for k in 1..centers.rows() {
        let d = squared_distance(vector, centers.row(k));
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Run K-Means over the utterance vectors with K equal to their count and
/// drop empty centers after convergence.
pub fn fit_subtopics(
    utterances: &UtteranceEmbeddings,
    config: &ClusteringConfig,
) -> Result<ClusterModel> {
    let points = &utterances.matrix;
    if points.is_empty() {
        return Err(GlcError::validation("cannot cluster zero utterance vectors"));
    }
    if !points.is_finite() {
        return Err(GlcError::validation(
            "utterance vectors contain non-finite entries",
        ));
    }
    if config.max_iters == 0 {
        return Err(GlcError::config("max_iters must be at least 1"));
    }
    if config.tol < 0.0 {
        return Err(GlcError::config("tol must be non-negative"));
    }

    let mut centers = match config.init {
        InitMethod::DataPoints => points.clone(),
        InitMethod::KMeansPlusPlus => kmeans_plus_plus_init(points, config.seed),
    };
    let k = centers.rows();
    let d = centers.cols();

    let mut assignments = vec![0usize; points.rows()];
    let mut objective_log = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..config.max_iters {
        iterations_run += 1;

        let mut objective = 0.0;
        for (i, row) in points.iter_rows().enumerate() {
            let (best, dist) = nearest_center(row, &centers);
            assignments[i] = best;
            objective += dist;
        }
        objective_log.push(objective);

        // Recompute each center as the mean of its members; a starved center
        // keeps its position until the final drop.
        let mut sums = Matrix::zeros(k, d);
        let mut counts = vec![0usize; k];
        for (i, row) in points.iter_rows().enumerate() {
            let c = assignments[i];
            counts[c] += 1;
            for (acc, v) in sums.row_mut(c).iter_mut().zip(row) {
                *acc += v;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let new_center: Vec<f64> = sums.row(c).iter().map(|v| v * inv).collect();
            movement = movement.max(squared_distance(&new_center, centers.row(c)).sqrt());
            centers.row_mut(c).copy_from_slice(&new_center);
        }

        if movement < config.tol {
            break;
        }
    }

    // Final assignment against the converged centers, then drop the centers
    // nobody chose and compact the indices in order.
    let final_assignments = assign_nearest(points, &centers)?;
    let mut keep = vec![false; k];
    for &a in &final_assignments {
        keep[a] = true;
    }
    let mut remap = vec![usize::MAX; k];
    let mut kept_rows = Vec::new();
    for (c, kept) in keep.iter().enumerate() {
        if *kept {
            remap[c] = kept_rows.len();
            kept_rows.push(centers.row(c).to_vec());
        }
    }
    let centers = Matrix::from_rows(kept_rows)?;
    let assignments: Vec<usize> = final_assignments.iter().map(|&a| remap[a]).collect();
    let mut members = vec![Vec::new(); centers.rows()];
    for (i, &a) in assignments.iter().enumerate() {
        members[a].push(i);
    }
    debug_assert!(members.iter().all(|m| !m.is_empty()));

    Ok(ClusterModel {
        centers,
        assignments,
        members,
        seed: config.seed,
        iterations_run,
        objective_log,
    })
}

/// Seeded k-means++-style initialization: first center uniform over the
/// points, each further center drawn with probability proportional to the
/// squared distance to the nearest chosen center. Once every remaining point
/// coincides with a chosen center (total weight zero, guaranteed here since
/// K equals the point count), the rest are filled in input order.
fn kmeans_plus_plus_init(points: &Matrix, seed: u64) -> Matrix {
    let n = points.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = vec![rng.random_range(0..n)];
    let mut nearest_sq: Vec<f64> = points
        .iter_rows()
        .map(|p| squared_distance(p, points.row(chosen[0])))
        .collect();

    while chosen.len() < n {
        let total: f64 = nearest_sq.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut next = n - 1;
        for (i, &w) in nearest_sq.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if pick < w {
                next = i;
                break;
            }
            pick -= w;
        }
        chosen.push(next);
        for (i, d) in nearest_sq.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.row(i), points.row(next)));
        }
    }
    // Duplicate coverage: pad with the remaining points in input order.
    let mut is_chosen = vec![false; n];
    for &c in &chosen {
        is_chosen[c] = true;
    }
    for i in 0..n {
        if chosen.len() == n {
            break;
        }
        if !is_chosen[i] {
            is_chosen[i] = true;
            chosen.push(i);
        }
    }
    Matrix::from_rows(chosen.into_iter().map(|i| points.row(i).to_vec()).collect())
        .expect("rows share the input dimension")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embeddings(rows: Vec<Vec<f64>>) -> UtteranceEmbeddings {
        UtteranceEmbeddings {
            matrix: Matrix::from_rows(rows).unwrap(),
        }
    }

    #[test]
    fn far_apart_points_each_form_a_cluster() {
        let utterances = embeddings(vec![
            vec![0.0, 0.0],
            vec![10.0, 0.0],
            vec![0.0, 10.0],
        ]);
        let model = fit_subtopics(&utterances, &ClusteringConfig::default()).unwrap();
        assert_eq!(model.cluster_count(), 3);
        assert_eq!(model.assignments, vec![0, 1, 2]);
        assert_eq!(model.members, vec![vec![0], vec![1], vec![2]]);
        // Data-point init is a Lloyd fixed point.
        assert_eq!(model.iterations_run, 1);
    }

    #[test]
    fn identical_points_collapse_to_one_cluster() {
        let utterances = embeddings(vec![vec![1.5, -2.0]; 4]);
        let model = fit_subtopics(&utterances, &ClusteringConfig::default()).unwrap();
        assert_eq!(model.cluster_count(), 1);
        assert_eq!(model.assignments, vec![0, 0, 0, 0]);
        assert_eq!(model.members, vec![vec![0, 1, 2, 3]]);
        assert_eq!(model.centers.row(0), &[1.5, -2.0]);
    }

    #[test]
    fn single_utterance_is_its_own_cluster() {
        let utterances = embeddings(vec![vec![3.0]]);
        let model = fit_subtopics(&utterances, &ClusteringConfig::default()).unwrap();
        assert_eq!(model.cluster_count(), 1);
        assert_eq!(model.assignments, vec![0]);
    }

    #[test]
    fn duplicate_groups_keep_lowest_index_center() {
        let utterances = embeddings(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ]);
        let model = fit_subtopics(&utterances, &ClusteringConfig::default()).unwrap();
        assert_eq!(model.cluster_count(), 2);
        assert_eq!(model.assignments, vec![0, 1, 0, 1]);
        assert_eq!(model.centers.row(0), &[1.0, 0.0]);
        assert_eq!(model.centers.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn zero_vectors_are_rejected_when_empty() {
        let utterances = UtteranceEmbeddings {
            matrix: Matrix::zeros(0, 2),
        };
        assert!(matches!(
            fit_subtopics(&utterances, &ClusteringConfig::default()),
            Err(GlcError::Validation(_))
        ));
    }

    #[test]
    fn non_finite_vectors_are_rejected() {
        let utterances = embeddings(vec![vec![f64::NAN, 0.0]]);
        assert!(matches!(
            fit_subtopics(&utterances, &ClusteringConfig::default()),
            Err(GlcError::Validation(_))
        ));
    }

    #[test]
    fn assign_nearest_prefers_zero_distance() {
        let centers =
            Matrix::from_rows(vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![2.0, 2.0]]).unwrap();
        let queries = Matrix::from_rows(vec![vec![2.0, 2.0]]).unwrap();
        assert_eq!(assign_nearest(&queries, &centers).unwrap(), vec![2]);
    }

    #[test]
    fn assign_nearest_breaks_ties_towards_lower_index() {
        let centers = Matrix::from_rows(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let queries = Matrix::from_rows(vec![vec![0.0, 0.0]]).unwrap();
        assert_eq!(assign_nearest(&queries, &centers).unwrap(), vec![0]);
    }

    #[test]
    fn assign_nearest_compares_squared_distances() {
        // (0.9, 0): 0.01 to (1, 0) vs 1.81 to (0, 1).
        let centers = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let queries = Matrix::from_rows(vec![vec![0.9, 0.0]]).unwrap();
        assert_eq!(assign_nearest(&queries, &centers).unwrap(), vec![0]);
    }

    #[test]
    fn assign_nearest_rejects_dimension_mismatch() {
        let centers = Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        let queries = Matrix::from_rows(vec![vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(assign_nearest(&queries, &centers).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let utterances = embeddings(vec![
            vec![0.3, 0.4],
            vec![0.3, 0.4],
            vec![-1.0, 2.0],
            vec![5.0, 5.0],
        ]);
        let config = ClusteringConfig::default();
        let a = fit_subtopics(&utterances, &config).unwrap();
        let b = fit_subtopics(&utterances, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scale_equivariance_of_data_point_init() {
        let utterances = embeddings(vec![
            vec![0.2, -0.7],
            vec![0.2, -0.7],
            vec![3.0, 1.0],
        ]);
        let scaled = UtteranceEmbeddings {
            matrix: utterances.matrix.scaled(2.0),
        };
        let config = ClusteringConfig::default();
        let base = fit_subtopics(&utterances, &config).unwrap();
        let big = fit_subtopics(&scaled, &config).unwrap();
        assert_eq!(base.assignments, big.assignments);
        for k in 0..base.cluster_count() {
            for (s, b) in big.centers.row(k).iter().zip(base.centers.row(k)) {
                assert_eq!(*s, b * 2.0);
            }
        }
    }

    #[test]
    fn kmeans_plus_plus_is_seed_deterministic() {
        let utterances = embeddings(vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![4.0, 4.0],
            vec![4.1, 4.0],
            vec![-3.0, 2.0],
        ]);
        let config = ClusteringConfig {
            init: InitMethod::KMeansPlusPlus,
            seed: 11,
            ..ClusteringConfig::default()
        };
        let a = fit_subtopics(&utterances, &config).unwrap();
        let b = fit_subtopics(&utterances, &config).unwrap();
        assert_eq!(a, b);
        // Lloyd objective never increases between iterations.
        for w in a.objective_log.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective increased: {w:?}");
        }
        assert!(a.members.iter().all(|m| !m.is_empty()));
    }
}
