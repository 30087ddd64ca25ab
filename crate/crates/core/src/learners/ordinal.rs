//! Ordinal decomposition: one binary task per cut of the ordered class
//! scale. A three-class scheme becomes "low vs {3,4}" and "{low,3} vs 4";
//! four classes add the cut below 2. Each task trains the base learner on
//! an is-above-the-cut indicator, and prediction stitches the per-cut
//! "above" probabilities back into a class distribution: adjacent cut
//! differences, clamped at zero and renormalized.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::{fit_flat, Model, ModelSpec, ProbVector};
use crate::mix_seed;

/// A fitted stack of per-cut binary models over an ordered class list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrdinalModel {
    /// Full ordered class list of the label scheme.
    pub classes: Vec<u8>,
    /// One flat binary model per cut, aligned with `classes[1..]`.
    pub binaries: Vec<Model>,
    pub n_cols: usize,
}

/// Turns per-cut P(class ≥ cut) values into a class distribution:
/// `(1 − a₁, a₁ − a₂, …, a_last)` with negative middles clamped to zero,
/// then renormalized. The sum before renormalizing is provably positive
/// for inputs in [0,1], so the result is always a valid distribution.
pub fn ordinal_combine(cut_probs: &[f64]) -> Vec<f64> {
    assert!(!cut_probs.is_empty());
    let n_classes = cut_probs.len() + 1;
    let mut raw = Vec::with_capacity(n_classes);
    raw.push(1.0 - cut_probs[0]);
    for j in 1..n_classes - 1 {
        raw.push((cut_probs[j - 1] - cut_probs[j]).max(0.0));
    }
    raw.push(cut_probs[n_classes - 2]);
    let sum: f64 = raw.iter().sum();
    for v in &mut raw {
        *v /= sum;
    }
    raw
}

/// Fits one binary model per class cut. Errors name the cut whose indicator
/// collapses to a single side.
pub fn fit_ordinal(
    spec: &ModelSpec,
    matrix: &FeatureMatrix,
    labels: &[u8],
    classes: &[u8],
    seed: u64,
) -> Result<OrdinalModel> {
    if classes.len() < 2 {
        return Err(Error::InvalidSpec(
            "an ordinal model needs at least two classes".into(),
        ));
    }
    let tasks: Vec<(usize, u8)> = classes[1..].iter().copied().enumerate().collect();
    for &(_, cut) in &tasks {
        let above = labels.iter().filter(|&&l| l >= cut).count();
        if above == 0 || above == labels.len() {
            return Err(Error::DegenerateTask(format!(
                "cut at class {cut}: every training label is on one side"
            )));
        }
    }
    let binaries: Vec<Result<Model>> = tasks
        .par_iter()
        .map(|&(j, cut)| {
            let binary_labels: Vec<u8> =
                labels.iter().map(|&l| u8::from(l >= cut)).collect();
            fit_flat(spec, matrix, &binary_labels, mix_seed(seed, j as u64))
        })
        .collect();
    let binaries = binaries.into_iter().collect::<Result<Vec<Model>>>()?;
    Ok(OrdinalModel { classes: classes.to_vec(), binaries, n_cols: matrix.n_cols() })
}

impl OrdinalModel {
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Result<Vec<ProbVector>> {
        let mut per_cut: Vec<Vec<ProbVector>> = Vec::with_capacity(self.binaries.len());
        for binary in &self.binaries {
            per_cut.push(binary.predict_proba(matrix)?);
        }
        Ok((0..matrix.n_rows())
            .map(|row| {
                let cut_probs: Vec<f64> = per_cut
                    .iter()
                    .zip(&self.binaries)
                    .map(|(preds, binary)| {
                        // The "above" side is binary class 1; a degenerate
                        // single-class sub-model cannot occur by fit-time
                        // construction, but an absent class simply means
                        // probability zero for it.
                        match binary.classes().iter().position(|&c| c == 1) {
                            Some(i) => preds[row].probs[i],
                            None => 0.0,
                        }
                    })
                    .collect();
                ProbVector { probs: ordinal_combine(&cut_probs) }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tests::dense_matrix;
    use crate::learners::{fit_model, LearnerKind};

    #[test]
    fn combine_rule_examples() {
        let p = ordinal_combine(&[0.8, 0.3]);
        assert!((p[0] - 0.2).abs() < 1e-12);
        assert!((p[1] - 0.5).abs() < 1e-12);
        assert!((p[2] - 0.3).abs() < 1e-12);

        let p = ordinal_combine(&[0.4, 0.6]);
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
        assert!((p[2] - 0.5).abs() < 1e-12);

        assert_eq!(ordinal_combine(&[1.0, 1.0]), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn combine_output_is_a_distribution_everywhere() {
        // Sweep the unit square of (a, b) including the clamp boundary.
        for ai in 0..=20 {
            for bi in 0..=20 {
                let a = ai as f64 / 20.0;
                let b = bi as f64 / 20.0;
                let p = ordinal_combine(&[a, b]);
                let sum: f64 = p.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "a={a} b={b}");
                assert!(p.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn combine_depends_only_on_the_cut_probabilities() {
        let p1 = ordinal_combine(&[0.7, 0.2]);
        let p2 = ordinal_combine(&[0.7, 0.2]);
        assert_eq!(p1, p2);
        // Small perturbations move the output continuously off the clamp.
        let q = ordinal_combine(&[0.7 + 1e-9, 0.2]);
        assert!((p1[1] - q[1]).abs() < 1e-8);
    }

    #[test]
    fn all_classes_present_fit_two_binaries() {
        let m = dense_matrix(&[[0.0], [1.0], [2.0], [6.0], [7.0], [8.0]]);
        let labels = [2u8, 2, 3, 3, 4, 4];
        let spec = ModelSpec { n_trees: 3, ..ModelSpec::new(LearnerKind::RandomForest) };
        let model = fit_ordinal(&spec, &m, &labels, &[2, 3, 4], 1).unwrap();
        assert_eq!(model.binaries.len(), 2);
        for p in model.predict_proba(&m).unwrap() {
            let sum: f64 = p.probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn missing_low_side_names_the_degenerate_cut() {
        let m = dense_matrix(&[[0.0], [1.0], [2.0], [3.0]]);
        let labels = [3u8, 3, 4, 4];
        let spec = ModelSpec::new(LearnerKind::RandomForest);
        let err = fit_ordinal(&spec, &m, &labels, &[2, 3, 4], 1).unwrap_err();
        match err {
            Error::DegenerateTask(msg) => assert!(msg.contains("class 3"), "{msg}"),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn four_class_scheme_fits_three_binaries() {
        let m = dense_matrix(&[[0.0], [1.0], [4.0], [5.0], [8.0], [9.0], [12.0], [13.0]]);
        let labels = [1u8, 1, 2, 2, 3, 3, 4, 4];
        let spec = ModelSpec { n_trees: 3, ..ModelSpec::new(LearnerKind::RandomForest) };
        let model = fit_ordinal(&spec, &m, &labels, &[1, 2, 3, 4], 1).unwrap();
        assert_eq!(model.binaries.len(), 3);
    }

    #[test]
    fn ordinal_and_flat_agree_on_separable_data() {
        let rows: Vec<[f64; 1]> = (0..30).map(|i| [i as f64 * 3.0]).collect();
        let labels: Vec<u8> =
            (0..30).map(|i| if i < 10 { 2 } else if i < 20 { 3 } else { 4 }).collect();
        let m = dense_matrix(&rows);
        let spec = ModelSpec { n_trees: 20, ..ModelSpec::new(LearnerKind::RandomForest) };
        let flat = fit_model(&spec, &m, &labels, &[2, 3, 4], 4).unwrap();
        let ordinal_spec = ModelSpec { ordinal: true, ..spec };
        let ordinal = fit_model(&ordinal_spec, &m, &labels, &[2, 3, 4], 4).unwrap();
        let a = flat.predict_class(&m).unwrap();
        let b = ordinal.predict_class(&m).unwrap();
        let agree = a.iter().zip(&b).filter(|(x, y)| x == y).count();
        assert!(agree as f64 / a.len() as f64 >= 0.95, "agreement {agree}/30");
    }
}
