//! Random forest: bagged classification trees with per-split column
//! sampling. Each tree draws a bootstrap sample of size n (with
//! replacement) and its own generator seeded from the master seed and the
//! tree index, so trees can be fitted in parallel in any order and still
//! reproduce the sequential model bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::tree::ClassTree;
use crate::learners::{class_indices, distinct_classes, ProbVector, TreeParams};
use crate::mix_seed;

/// A fitted forest of classification trees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub classes: Vec<u8>,
    pub trees: Vec<ClassTree>,
    pub seed: u64,
    pub n_cols: usize,
}

/// Fits `n_trees` bagged trees.
pub fn fit_forest(
    matrix: &FeatureMatrix,
    labels: &[u8],
    n_trees: usize,
    params: &TreeParams,
    seed: u64,
) -> Result<ForestModel> {
    if n_trees < 1 {
        return Err(Error::InvalidSpec("a forest needs at least one tree".into()));
    }
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyInput("fit_forest"));
    }
    params.validate()?;
    let classes = distinct_classes(labels);
    let class_idx = class_indices(labels, &classes)?;
    let n = matrix.n_rows();
    let trees: Vec<ClassTree> = (0..n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, t as u64));
            let rows: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
            ClassTree::fit(matrix, &class_idx, &rows, classes.len(), params, &mut rng)
        })
        .collect();
    Ok(ForestModel { classes, trees, seed, n_cols: matrix.n_cols() })
}

/// Fits a single tree on all rows (no bootstrap); the one-tree special case
/// of the forest, exposed for direct use.
pub fn fit_tree(
    matrix: &FeatureMatrix,
    labels: &[u8],
    params: &TreeParams,
    seed: u64,
) -> Result<ForestModel> {
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyInput("fit_tree"));
    }
    params.validate()?;
    let classes = distinct_classes(labels);
    let class_idx = class_indices(labels, &classes)?;
    let rows: Vec<u32> = (0..matrix.n_rows() as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0));
    let tree = ClassTree::fit(matrix, &class_idx, &rows, classes.len(), params, &mut rng);
    Ok(ForestModel { classes, trees: vec![tree], seed, n_cols: matrix.n_cols() })
}

impl ForestModel {
    /// Mean of the per-tree leaf distributions.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Vec<ProbVector> {
        let k = self.trees.len() as f64;
        (0..matrix.n_rows())
            .map(|row| {
                let mut probs = vec![0.0; self.classes.len()];
                for tree in &self.trees {
                    for (p, leaf) in probs.iter_mut().zip(tree.leaf_dist(matrix, row)) {
                        *p += leaf;
                    }
                }
                for p in &mut probs {
                    *p /= k;
                }
                ProbVector { probs }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tests::dense_matrix;
    use crate::learners::tree::ClassNode;
    use crate::learners::FeatureRule;

    fn separable() -> (FeatureMatrix, Vec<u8>) {
        let rows: Vec<[f64; 2]> =
            (0..20).map(|i| [if i < 10 { i as f64 } else { i as f64 + 50.0 }, 0.0]).collect();
        let labels = (0..20).map(|i| if i < 10 { 3 } else { 4 }).collect();
        (dense_matrix(&rows), labels)
    }

    #[test]
    fn single_full_tree_on_pure_data_equals_the_tree() {
        let (m, labels) = separable();
        let params =
            TreeParams { feature_rule: FeatureRule::All, ..TreeParams::default() };
        let forest = fit_forest(&m, &labels, 1, &params, 3).unwrap();
        let lone = fit_tree(&m, &labels, &params, 3).unwrap();
        // Bootstrap resampling cannot disturb pure-leaf predictions here:
        // the split at the gap separates the classes for any resample that
        // keeps both classes; seed 3 does.
        for row in 0..m.n_rows() {
            assert_eq!(
                forest.predict_proba(&m)[row].probs,
                lone.predict_proba(&m)[row].probs
            );
        }
    }

    #[test]
    fn prediction_is_mean_of_leaf_distributions() {
        // Hand-built forest: three single-leaf trees voting 2:1.
        let forest = ForestModel {
            classes: vec![2, 3, 4],
            trees: vec![
                ClassTree { nodes: vec![ClassNode::Leaf { dist: vec![1.0, 0.0, 0.0] }], n_classes: 3 },
                ClassTree { nodes: vec![ClassNode::Leaf { dist: vec![1.0, 0.0, 0.0] }], n_classes: 3 },
                ClassTree { nodes: vec![ClassNode::Leaf { dist: vec![0.0, 1.0, 0.0] }], n_classes: 3 },
            ],
            seed: 0,
            n_cols: 1,
        };
        let m = dense_matrix(&[[0.0]]);
        let probs = &forest.predict_proba(&m)[0].probs;
        assert!((probs[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((probs[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(probs[2], 0.0);
    }

    #[test]
    fn same_seed_gives_an_identical_model() {
        let (m, labels) = separable();
        let a = fit_forest(&m, &labels, 7, &TreeParams::default(), 42).unwrap();
        let b = fit_forest(&m, &labels, 7, &TreeParams::default(), 42).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = fit_forest(&m, &labels, 7, &TreeParams::default(), 43).unwrap();
        assert_ne!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn thread_count_does_not_change_the_model() {
        let (m, labels) = separable();
        let fit_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| fit_forest(&m, &labels, 16, &TreeParams::default(), 9).unwrap())
        };
        let one = serde_json::to_string(&fit_with(1)).unwrap();
        let four = serde_json::to_string(&fit_with(4)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let (m, labels) = separable();
        let forest = fit_forest(&m, &labels, 10, &TreeParams::default(), 5).unwrap();
        for p in forest.predict_proba(&m) {
            let sum: f64 = p.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(p.probs.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn needs_at_least_one_tree() {
        let (m, labels) = separable();
        assert!(fit_forest(&m, &labels, 0, &TreeParams::default(), 0).is_err());
    }
}
