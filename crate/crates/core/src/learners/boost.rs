//! Stagewise gradient boosting for multinomial log-loss.
//!
//! Scores start at the class log-frequencies (so a zero-round model
//! predicts the training prior). Each round fits one regression tree per
//! class to the softmax residuals y − p and adds its shrunk predictions to
//! that class's score column. Leaves predict the mean residual — a
//! projected gradient step, which is why the recorded training loss can
//! never increase at learning rates in the stable range. The L2 variant
//! shrinks each leaf by count/(count+1), staying inside the same bound.
//!
//! The procedure consumes no randomness: (matrix, labels, parameters)
//! determine the model exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::tree::{RegParams, RegTree};
use crate::learners::{class_indices, distinct_classes, ProbVector};

/// A fitted boosted ensemble: per-round, per-class regression trees on top
/// of constant initial scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostModel {
    pub classes: Vec<u8>,
    pub learning_rate: f64,
    pub init_scores: Vec<f64>,
    /// `rounds[r][c]` is round r's tree for class c.
    pub rounds: Vec<Vec<RegTree>>,
    /// Training log-loss before any round and after each round
    /// (`n_rounds + 1` entries, non-increasing).
    pub train_loss: Vec<f64>,
    pub n_cols: usize,
}

fn softmax_rows(scores: &[Vec<f64>], n_rows: usize) -> Vec<Vec<f64>> {
    let n_classes = scores.len();
    (0..n_rows)
        .map(|i| {
            let mut row: Vec<f64> = (0..n_classes).map(|c| scores[c][i]).collect();
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in &mut row {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in &mut row {
                *v /= sum;
            }
            row
        })
        .collect()
}

fn mean_log_loss(probs: &[Vec<f64>], class_idx: &[u32]) -> f64 {
    let mut sum = 0.0;
    for (i, &c) in class_idx.iter().enumerate() {
        sum -= probs[i][c as usize].max(f64::MIN_POSITIVE).ln();
    }
    sum / class_idx.len() as f64
}

/// Fits a boosted model. With `n_rounds` 0 the model is the training prior.
pub fn fit_boost(
    matrix: &FeatureMatrix,
    labels: &[u8],
    n_rounds: usize,
    learning_rate: f64,
    params: &RegParams,
) -> Result<BoostModel> {
    if matrix.n_rows() == 0 {
        return Err(Error::EmptyInput("fit_boost"));
    }
    let classes = distinct_classes(labels);
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let class_idx = class_indices(labels, &classes)?;
    let n = matrix.n_rows();
    let n_classes = classes.len();

    let mut counts = vec![0u64; n_classes];
    for &c in &class_idx {
        counts[c as usize] += 1;
    }
    let init_scores: Vec<f64> =
        counts.iter().map(|&c| (c as f64 / n as f64).max(f64::MIN_POSITIVE).ln()).collect();

    let mut scores: Vec<Vec<f64>> =
        init_scores.iter().map(|&s| vec![s; n]).collect();
    let all_rows: Vec<u32> = (0..n as u32).collect();
    let mut rounds = Vec::with_capacity(n_rounds);
    let mut train_loss = Vec::with_capacity(n_rounds + 1);

    let mut probs = softmax_rows(&scores, n);
    train_loss.push(mean_log_loss(&probs, &class_idx));

    for _ in 0..n_rounds {
        let round_trees: Vec<RegTree> = (0..n_classes)
            .into_par_iter()
            .map(|c| {
                let targets: Vec<f64> = (0..n)
                    .map(|i| {
                        let y = if class_idx[i] as usize == c { 1.0 } else { 0.0 };
                        y - probs[i][c]
                    })
                    .collect();
                RegTree::fit(matrix, &targets, &all_rows, params)
            })
            .collect();
        for (c, tree) in round_trees.iter().enumerate() {
            for (i, score) in scores[c].iter_mut().enumerate() {
                *score += learning_rate * tree.predict_row(matrix, i);
            }
        }
        rounds.push(round_trees);
        probs = softmax_rows(&scores, n);
        train_loss.push(mean_log_loss(&probs, &class_idx));
    }

    Ok(BoostModel {
        classes,
        learning_rate,
        init_scores,
        rounds,
        train_loss,
        n_cols: matrix.n_cols(),
    })
}

impl BoostModel {
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Vec<ProbVector> {
        let n = matrix.n_rows();
        let mut scores: Vec<Vec<f64>> =
            self.init_scores.iter().map(|&s| vec![s; n]).collect();
        for round in &self.rounds {
            for (c, tree) in round.iter().enumerate() {
                for (i, score) in scores[c].iter_mut().enumerate() {
                    *score += self.learning_rate * tree.predict_row(matrix, i);
                }
            }
        }
        softmax_rows(&scores, n).into_iter().map(|probs| ProbVector { probs }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tests::dense_matrix;

    fn reg_params() -> RegParams {
        RegParams { max_depth: 3, min_samples_split: 2, leaf_lambda: 0.0 }
    }

    #[test]
    fn zero_rounds_predicts_class_frequencies() {
        let m = dense_matrix(&[[0.0], [1.0], [2.0], [3.0]]);
        let labels = [2u8, 3, 3, 4];
        let model = fit_boost(&m, &labels, 0, 0.1, &reg_params()).unwrap();
        let probs = &model.predict_proba(&m)[0].probs;
        assert!((probs[0] - 0.25).abs() < 1e-12);
        assert!((probs[1] - 0.5).abs() < 1e-12);
        assert!((probs[2] - 0.25).abs() < 1e-12);
        assert_eq!(model.train_loss.len(), 1);
    }

    #[test]
    fn separable_two_class_data_reaches_training_accuracy_one() {
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| if i < 10 { 3 } else { 4 }).collect();
        let m = dense_matrix(&rows);
        let model = fit_boost(&m, &labels, 50, 0.1, &reg_params()).unwrap();
        let preds = model.predict_proba(&m);
        for (i, p) in preds.iter().enumerate() {
            assert_eq!(model.classes[p.argmax()], labels[i], "row {i}");
        }
        assert!(model.train_loss.last().unwrap() < &0.2);
    }

    #[test]
    fn recorded_loss_never_increases() {
        let rows: Vec<[f64; 2]> = (0..30)
            .map(|i| [(i % 7) as f64, ((i * 13) % 5) as f64])
            .collect();
        let labels: Vec<u8> = (0..30).map(|i| [2u8, 3, 4][(i * 11) % 3]).collect();
        let m = dense_matrix(&rows);
        for lambda in [0.0, 1.0] {
            let params = RegParams { leaf_lambda: lambda, ..reg_params() };
            let model = fit_boost(&m, &labels, 60, 0.1, &params).unwrap();
            assert_eq!(model.train_loss.len(), 61);
            for w in model.train_loss.windows(2) {
                assert!(w[1] <= w[0], "loss rose: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn regularized_leaves_shrink_the_first_step() {
        let m = dense_matrix(&[[0.0], [10.0]]);
        let labels = [3u8, 4];
        let plain = fit_boost(&m, &labels, 1, 0.1, &reg_params()).unwrap();
        let reg = fit_boost(
            &m,
            &labels,
            1,
            0.1,
            &RegParams { leaf_lambda: 1.0, ..reg_params() },
        )
        .unwrap();
        // Both are leaves over single rows: residual r vs r·(1/2).
        let p_plain = plain.predict_proba(&m)[0].probs[0];
        let p_reg = reg.predict_proba(&m)[0].probs[0];
        assert!(p_plain > p_reg, "{p_plain} vs {p_reg}");
        assert!(reg.train_loss[1] <= reg.train_loss[0]);
    }

    #[test]
    fn single_class_is_rejected() {
        let m = dense_matrix(&[[0.0], [1.0]]);
        assert!(matches!(fit_boost(&m, &[3, 3], 5, 0.1, &reg_params()), Err(Error::SingleClass)));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let rows: Vec<[f64; 1]> = (0..12).map(|i| [(i % 5) as f64]).collect();
        let labels: Vec<u8> = (0..12).map(|i| if i % 3 == 0 { 2 } else { 4 }).collect();
        let m = dense_matrix(&rows);
        let model = fit_boost(&m, &labels, 10, 0.1, &reg_params()).unwrap();
        for p in model.predict_proba(&m) {
            let sum: f64 = p.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn boosting_is_deterministic_across_thread_counts() {
        let rows: Vec<[f64; 2]> = (0..24).map(|i| [(i % 6) as f64, (i % 4) as f64]).collect();
        let labels: Vec<u8> = (0..24).map(|i| [2u8, 3, 4][(i * 7) % 3]).collect();
        let m = dense_matrix(&rows);
        let fit_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| fit_boost(&m, &labels, 8, 0.1, &reg_params()).unwrap())
        };
        assert_eq!(
            serde_json::to_string(&fit_with(1)).unwrap(),
            serde_json::to_string(&fit_with(3)).unwrap()
        );
    }
}
