//! CART trees grown greedily on a feature matrix.
//!
//! Two variants share the split machinery: classification trees minimize
//! Gini impurity and store class-count distributions at the leaves;
//! regression trees minimize squared error and store mean targets (with an
//! optional L2 shrinkage term on the leaf weight). Dense columns are
//! searched by sorting the node's values and testing midpoints between
//! distinct neighbours; binary text columns need only a presence/absence
//! partition, which classification trees read per-row from the column
//! bitsets and regression trees accumulate in one histogram pass over the
//! node's sparse rows (cheap even with a thousand text columns, because a
//! boosting tree considers every column at every node).
//!
//! Determinism: candidate columns are visited in ascending order, ties keep
//! the first best split, and rows partition in stable order, so a tree is a
//! pure function of (matrix, labels, params, rng state).

use rand::seq::index::sample as index_sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::learners::{FeatureRule, TreeParams};

/// Minimal impurity improvement for a split to be accepted.
const MIN_GAIN: f64 = 1e-12;

/// Rows with `value ≤ threshold` go left; for binary columns the threshold
/// is 0.5, so absence goes left and presence right.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ClassNode {
    Split { col: u32, threshold: f64, left: u32, right: u32 },
    Leaf { dist: Vec<f64> },
}

/// A fitted classification tree over `n_classes` class indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassTree {
    pub(crate) nodes: Vec<ClassNode>,
    pub(crate) n_classes: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    col: u32,
    threshold: f64,
    gain: f64,
}

fn gini(counts: &[u64], n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n) * (c as f64 / n)).sum::<f64>()
}

fn split_gain(parent_gini: f64, left: &[u64], right: &[u64], n_left: u64, n_right: u64) -> f64 {
    let n = (n_left + n_right) as f64;
    let weighted =
        (n_left as f64 * gini(left, n_left) + n_right as f64 * gini(right, n_right)) / n;
    parent_gini - weighted
}

/// Number of candidate columns a rule yields for a `k`-column matrix.
fn rule_count(rule: FeatureRule, k: usize) -> usize {
    match rule {
        FeatureRule::All => k,
        FeatureRule::Sqrt => (k as f64).sqrt().floor().max(1.0) as usize,
        FeatureRule::Count(m) => m.clamp(1, k),
    }
}

fn sample_columns(rng: &mut ChaCha8Rng, k: usize, m: usize) -> Vec<u32> {
    if m >= k {
        return (0..k as u32).collect();
    }
    let mut cols: Vec<u32> = index_sample(rng, k, m).into_iter().map(|c| c as u32).collect();
    cols.sort_unstable();
    cols
}

fn best_class_split(
    matrix: &FeatureMatrix,
    class_idx: &[u32],
    n_classes: usize,
    rows: &[u32],
    cols: &[u32],
    parent_counts: &[u64],
) -> Option<Candidate> {
    let n = rows.len() as u64;
    let parent_gini = gini(parent_counts, n);
    let n_dense = matrix.n_dense();
    let mut best: Option<Candidate> = None;
    let mut consider = |cand: Candidate| {
        if cand.gain > MIN_GAIN && best.is_none_or(|b| cand.gain > b.gain) {
            best = Some(cand);
        }
    };
    let mut right = vec![0u64; n_classes];
    for &col in cols {
        if (col as usize) < n_dense {
            let mut pairs: Vec<(f64, u32)> = rows
                .iter()
                .map(|&r| (matrix.dense_value(r as usize, col as usize), class_idx[r as usize]))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = vec![0u64; n_classes];
            for i in 0..pairs.len() - 1 {
                left[pairs[i].1 as usize] += 1;
                if pairs[i + 1].0 > pairs[i].0 {
                    for c in 0..n_classes {
                        right[c] = parent_counts[c] - left[c];
                    }
                    let n_left = (i + 1) as u64;
                    let gain = split_gain(parent_gini, &left, &right, n_left, n - n_left);
                    consider(Candidate {
                        col,
                        threshold: (pairs[i].0 + pairs[i + 1].0) / 2.0,
                        gain,
                    });
                }
            }
        } else {
            let t = col as usize - n_dense;
            let mut present = vec![0u64; n_classes];
            let mut n_present = 0u64;
            for &r in rows {
                if matrix.text_present(r as usize, t) {
                    present[class_idx[r as usize] as usize] += 1;
                    n_present += 1;
                }
            }
            if n_present == 0 || n_present == n {
                continue;
            }
            for c in 0..n_classes {
                right[c] = parent_counts[c] - present[c];
            }
            // Presence (value 1) is the right branch: "left" counts are the
            // absent rows.
            let gain = split_gain(parent_gini, &right, &present, n - n_present, n_present);
            consider(Candidate { col, threshold: 0.5, gain });
        }
    }
    best
}

fn partition_rows(matrix: &FeatureMatrix, rows: &[u32], col: u32, threshold: f64) -> (Vec<u32>, Vec<u32>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &r in rows {
        if matrix.value(r as usize, col as usize) <= threshold {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    (left, right)
}

impl ClassTree {
    /// Grows a tree on the given row multiset (bootstrap duplicates allowed),
    /// drawing a fresh candidate-column sample per node from `rng`.
    pub fn fit(
        matrix: &FeatureMatrix,
        class_idx: &[u32],
        rows: &[u32],
        n_classes: usize,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> ClassTree {
        assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
        let k = matrix.n_cols();
        let m = rule_count(params.feature_rule, k);
        let max_depth = params.max_depth.map_or(u32::MAX, |d| d);
        let mut nodes = vec![ClassNode::Leaf { dist: Vec::new() }];
        let mut stack: Vec<(u32, Vec<u32>, u32)> = vec![(0, rows.to_vec(), 0)];
        while let Some((slot, node_rows, depth)) = stack.pop() {
            let mut counts = vec![0u64; n_classes];
            for &r in &node_rows {
                counts[class_idx[r as usize] as usize] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let mut leaf = true;
            if !pure && depth < max_depth && node_rows.len() >= params.min_samples_split {
                let cols = sample_columns(rng, k, m);
                if let Some(best) =
                    best_class_split(matrix, class_idx, n_classes, &node_rows, &cols, &counts)
                {
                    let (left_rows, right_rows) =
                        partition_rows(matrix, &node_rows, best.col, best.threshold);
                    let left = nodes.len() as u32;
                    nodes.push(ClassNode::Leaf { dist: Vec::new() });
                    let right = nodes.len() as u32;
                    nodes.push(ClassNode::Leaf { dist: Vec::new() });
                    nodes[slot as usize] = ClassNode::Split {
                        col: best.col,
                        threshold: best.threshold,
                        left,
                        right,
                    };
                    stack.push((right, right_rows, depth + 1));
                    stack.push((left, left_rows, depth + 1));
                    leaf = false;
                }
            }
            if leaf {
                let n = node_rows.len() as f64;
                nodes[slot as usize] =
                    ClassNode::Leaf { dist: counts.iter().map(|&c| c as f64 / n).collect() };
            }
        }
        ClassTree { nodes, n_classes }
    }

    /// Class distribution at the leaf a row lands in.
    pub fn leaf_dist(&self, matrix: &FeatureMatrix, row: usize) -> &[f64] {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                ClassNode::Split { col, threshold, left, right } => {
                    at = if matrix.value(row, *col as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                ClassNode::Leaf { dist } => return dist,
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, ClassNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> u32 {
        fn walk(nodes: &[ClassNode], at: usize) -> u32 {
            match &nodes[at] {
                ClassNode::Leaf { .. } => 0,
                ClassNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Parameters for a regression tree inside the boosting loop.
#[derive(Debug, Clone, Copy)]
pub struct RegParams {
    pub max_depth: u32,
    pub min_samples_split: usize,
    /// L2 shrinkage on leaf weights: a leaf predicts sum/(count + lambda).
    pub leaf_lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RegNode {
    Split { col: u32, threshold: f64, left: u32, right: u32 },
    Leaf { value: f64 },
}

/// A fitted least-squares regression tree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegTree {
    pub(crate) nodes: Vec<RegNode>,
}

struct RegNodeStats {
    sum: f64,
    n: u64,
}

fn best_reg_split(
    matrix: &FeatureMatrix,
    targets: &[f64],
    rows: &[u32],
    stats: &RegNodeStats,
) -> Option<Candidate> {
    let n = stats.n;
    let base = stats.sum * stats.sum / n as f64;
    let mut best: Option<Candidate> = None;
    let mut consider = |cand: Candidate| {
        if cand.gain > MIN_GAIN && best.is_none_or(|b| cand.gain > b.gain) {
            best = Some(cand);
        }
    };

    // Dense columns: sort the node's values and scan midpoints.
    for col in 0..matrix.n_dense() {
        let mut pairs: Vec<(f64, f64)> = rows
            .iter()
            .map(|&r| (matrix.dense_value(r as usize, col), targets[r as usize]))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_sum = 0.0;
        for i in 0..pairs.len() - 1 {
            left_sum += pairs[i].1;
            if pairs[i + 1].0 > pairs[i].0 {
                let n_left = (i + 1) as f64;
                let n_right = (n - (i as u64 + 1)) as f64;
                let right_sum = stats.sum - left_sum;
                let score = left_sum * left_sum / n_left + right_sum * right_sum / n_right;
                consider(Candidate {
                    col: col as u32,
                    threshold: (pairs[i].0 + pairs[i + 1].0) / 2.0,
                    gain: score - base,
                });
            }
        }
    }

    // Binary columns: one histogram pass over the node's sparse rows gives
    // every column's present-side sum and count at once.
    let n_text = matrix.n_text();
    if n_text > 0 {
        let mut sums = vec![0.0f64; n_text];
        let mut counts = vec![0u64; n_text];
        for &r in rows {
            let t = targets[r as usize];
            for &c in matrix.row_text_cols(r as usize) {
                sums[c as usize] += t;
                counts[c as usize] += 1;
            }
        }
        for t in 0..n_text {
            let n_present = counts[t];
            if n_present == 0 || n_present == n {
                continue;
            }
            let present_sum = sums[t];
            let absent_sum = stats.sum - present_sum;
            let n_absent = (n - n_present) as f64;
            let score =
                present_sum * present_sum / n_present as f64 + absent_sum * absent_sum / n_absent;
            consider(Candidate {
                col: (matrix.n_dense() + t) as u32,
                threshold: 0.5,
                gain: score - base,
            });
        }
    }
    best
}

impl RegTree {
    /// Grows a depth-limited least-squares tree over every column.
    pub fn fit(matrix: &FeatureMatrix, targets: &[f64], rows: &[u32], params: &RegParams) -> RegTree {
        assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
        let mut nodes = vec![RegNode::Leaf { value: 0.0 }];
        let mut stack: Vec<(u32, Vec<u32>, u32)> = vec![(0, rows.to_vec(), 0)];
        while let Some((slot, node_rows, depth)) = stack.pop() {
            let sum: f64 = node_rows.iter().map(|&r| targets[r as usize]).sum();
            let stats = RegNodeStats { sum, n: node_rows.len() as u64 };
            let mut leaf = true;
            if depth < params.max_depth && node_rows.len() >= params.min_samples_split {
                if let Some(best) = best_reg_split(matrix, targets, &node_rows, &stats) {
                    let (left_rows, right_rows) =
                        partition_rows(matrix, &node_rows, best.col, best.threshold);
                    let left = nodes.len() as u32;
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    let right = nodes.len() as u32;
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    nodes[slot as usize] = RegNode::Split {
                        col: best.col,
                        threshold: best.threshold,
                        left,
                        right,
                    };
                    stack.push((right, right_rows, depth + 1));
                    stack.push((left, left_rows, depth + 1));
                    leaf = false;
                }
            }
            if leaf {
                nodes[slot as usize] = RegNode::Leaf {
                    value: stats.sum / (stats.n as f64 + params.leaf_lambda),
                };
            }
        }
        RegTree { nodes }
    }

    pub fn predict_row(&self, matrix: &FeatureMatrix, row: usize) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                RegNode::Split { col, threshold, left, right } => {
                    at = if matrix.value(row, *col as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                RegNode::Leaf { value } => return *value,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tests::{dense_matrix, text_matrix};
    use rand::SeedableRng;

    fn all_rows(n: usize) -> Vec<u32> {
        (0..n as u32).collect()
    }

    fn params_all() -> TreeParams {
        TreeParams { feature_rule: FeatureRule::All, ..TreeParams::default() }
    }

    #[test]
    fn pure_labels_make_a_single_leaf() {
        let m = dense_matrix(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = ClassTree::fit(&m, &[1, 1, 1], &all_rows(3), 2, &params_all(), &mut rng);
        assert_eq!(tree.n_leaves(), 1);
        assert_eq!(tree.leaf_dist(&m, 0), &[0.0, 1.0]);
    }

    #[test]
    fn separable_feature_gives_depth_one_and_perfect_training_accuracy() {
        let m = dense_matrix(&[[0.1, 7.0], [0.2, 7.0], [0.9, 7.0], [0.8, 7.0]]);
        let labels = [0u32, 0, 1, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = ClassTree::fit(&m, &labels, &all_rows(4), 2, &params_all(), &mut rng);
        assert_eq!(tree.depth(), 1);
        for (row, &label) in labels.iter().enumerate() {
            let dist = tree.leaf_dist(&m, row);
            assert_eq!(dist[label as usize], 1.0);
        }
    }

    /// Exhaustive best-split search over every column and midpoint, for
    /// comparison with the tree's greedy choice.
    fn brute_force_best_gain(m: &FeatureMatrix, class_idx: &[u32], n_classes: usize) -> f64 {
        let n = class_idx.len();
        let mut parent = vec![0u64; n_classes];
        for &c in class_idx {
            parent[c as usize] += 1;
        }
        let parent_gini = gini(&parent, n as u64);
        let mut best: f64 = 0.0;
        for col in 0..m.n_cols() {
            let mut values: Vec<f64> = (0..n).map(|r| m.value(r, col)).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let thr = (w[0] + w[1]) / 2.0;
                let mut left = vec![0u64; n_classes];
                let mut right = vec![0u64; n_classes];
                for r in 0..n {
                    if m.value(r, col) <= thr {
                        left[class_idx[r] as usize] += 1;
                    } else {
                        right[class_idx[r] as usize] += 1;
                    }
                }
                let nl: u64 = left.iter().sum();
                let nr: u64 = right.iter().sum();
                best = best.max(split_gain(parent_gini, &left, &right, nl, nr));
            }
        }
        best
    }

    #[test]
    fn root_split_matches_exhaustive_search_on_hand_dataset() {
        let m = dense_matrix(&[[1.0, 10.0], [2.0, 40.0], [3.0, 20.0], [4.0, 30.0]]);
        let class_idx = [0u32, 1, 0, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let tree = ClassTree::fit(&m, &class_idx, &all_rows(4), 2, &params_all(), &mut rng);
        let ClassNode::Split { col, threshold, .. } = tree.nodes[0] else {
            panic!("root must split");
        };
        // Recompute the chosen split's gain and compare with brute force.
        let mut parent = vec![0u64; 2];
        for &c in &class_idx {
            parent[c as usize] += 1;
        }
        let mut left = vec![0u64; 2];
        let mut right = vec![0u64; 2];
        for r in 0..4 {
            if m.value(r, col as usize) <= threshold {
                left[class_idx[r] as usize] += 1;
            } else {
                right[class_idx[r] as usize] += 1;
            }
        }
        let nl: u64 = left.iter().sum();
        let chosen = split_gain(gini(&parent, 4), &left, &right, nl, 4 - nl);
        let brute = brute_force_best_gain(&m, &class_idx, 2);
        assert!((chosen - brute).abs() < 1e-12, "{chosen} vs {brute}");
        // Column 1 separates classes perfectly at 25: {10,20} vs {30,40}.
        assert_eq!(col, 1);
        assert_eq!(threshold, 25.0);
    }

    #[test]
    fn binary_text_columns_split_on_presence() {
        // Rows 0,1 carry text column 0; rows 2,3 carry column 1.
        let m = text_matrix(2, &[&[0], &[0], &[1], &[1]]);
        let labels = [0u32, 0, 1, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = ClassTree::fit(&m, &labels, &all_rows(4), 2, &params_all(), &mut rng);
        assert_eq!(tree.depth(), 1);
        for (row, &label) in labels.iter().enumerate() {
            assert_eq!(tree.leaf_dist(&m, row)[label as usize], 1.0);
        }
    }

    #[test]
    fn max_depth_caps_growth() {
        let m = dense_matrix(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0], [4.0, 0.0]]);
        let labels = [0u32, 1, 0, 1];
        let params = TreeParams { max_depth: Some(1), ..params_all() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = ClassTree::fit(&m, &labels, &all_rows(4), 2, &params, &mut rng);
        assert!(tree.depth() <= 1);
    }

    #[test]
    fn bootstrap_duplicates_weight_the_distribution() {
        let m = dense_matrix(&[[0.0, 0.0], [0.0, 0.0]]);
        let labels = [0u32, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Row 1 appears twice: the (unsplittable) root leaf is 1/3, 2/3.
        let tree = ClassTree::fit(&m, &labels, &[0, 1, 1], 2, &params_all(), &mut rng);
        let dist = tree.leaf_dist(&m, 0);
        assert!((dist[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((dist[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn regression_tree_fits_step_function() {
        let m = dense_matrix(&[[1.0, 0.0], [2.0, 0.0], [8.0, 0.0], [9.0, 0.0]]);
        let targets = [-1.0, -1.0, 1.0, 1.0];
        let params = RegParams { max_depth: 3, min_samples_split: 2, leaf_lambda: 0.0 };
        let tree = RegTree::fit(&m, &targets, &all_rows(4), &params);
        for (row, &t) in targets.iter().enumerate() {
            assert_eq!(tree.predict_row(&m, row), t);
        }
    }

    #[test]
    fn leaf_lambda_shrinks_predictions() {
        let m = dense_matrix(&[[1.0, 0.0], [1.0, 0.0]]);
        let targets = [3.0, 3.0];
        let plain = RegTree::fit(
            &m,
            &targets,
            &all_rows(2),
            &RegParams { max_depth: 3, min_samples_split: 2, leaf_lambda: 0.0 },
        );
        let shrunk = RegTree::fit(
            &m,
            &targets,
            &all_rows(2),
            &RegParams { max_depth: 3, min_samples_split: 2, leaf_lambda: 1.0 },
        );
        assert_eq!(plain.predict_row(&m, 0), 3.0);
        // sum 6 over count 2 + lambda 1.
        assert_eq!(shrunk.predict_row(&m, 0), 2.0);
    }

    #[test]
    fn regression_splits_use_text_histograms() {
        let m = text_matrix(3, &[&[0], &[0, 2], &[1], &[1, 2]]);
        let targets = [5.0, 5.0, -5.0, -5.0];
        let params = RegParams { max_depth: 2, min_samples_split: 2, leaf_lambda: 0.0 };
        let tree = RegTree::fit(&m, &targets, &all_rows(4), &params);
        for (row, &t) in targets.iter().enumerate() {
            assert_eq!(tree.predict_row(&m, row), t);
        }
    }

    #[test]
    fn same_rng_stream_reproduces_the_tree() {
        let m = dense_matrix(&[[1.0, 4.0], [2.0, 3.0], [3.0, 2.0], [4.0, 1.0]]);
        let labels = [0u32, 1, 1, 0];
        let params = TreeParams {
            feature_rule: FeatureRule::Count(1),
            ..TreeParams::default()
        };
        let fit = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ClassTree::fit(&m, &labels, &all_rows(4), 2, &params, &mut rng)
        };
        let a = serde_json::to_string(&fit(5).nodes).unwrap();
        let b = serde_json::to_string(&fit(5).nodes).unwrap();
        assert_eq!(a, b);
    }
}
