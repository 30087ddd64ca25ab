//! Classifiers over feature matrices: a random forest and a multinomial
//! gradient-boosted tree ensemble (with an L2-regularized variant), both
//! built on the CART engine in [`tree`], plus an ordinal wrapper that
//! decomposes the ordered class scale into cumulative binary tasks and a
//! modal-class baseline. Every learner emits per-class probabilities; the
//! predicted class is the argmax with ties broken toward the lower class.
//!
//! Fitting is deterministic: randomized learners consume seeds derived
//! per-tree from the caller's master seed, so parallel and sequential runs
//! produce identical models.

pub mod boost;
pub mod forest;
pub mod ordinal;
pub mod tree;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub use boost::{fit_boost, BoostModel};
pub use forest::{fit_forest, ForestModel};
pub use ordinal::{fit_ordinal, ordinal_combine, OrdinalModel};
pub use tree::{ClassTree, RegParams, RegTree};

/// Split impurity measure (classification trees).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Impurity {
    #[default]
    Gini,
}

/// How many candidate columns each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRule {
    /// floor(sqrt(k)), the forest default.
    Sqrt,
    All,
    Count(usize),
}

/// Growth limits for a single classification tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<u32>,
    pub min_samples_split: usize,
    pub feature_rule: FeatureRule,
    pub impurity: Impurity,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            feature_rule: FeatureRule::Sqrt,
            impurity: Impurity::Gini,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.max_depth {
            if d < 1 {
                return Err(Error::InvalidSpec("max_depth must be ≥ 1".into()));
            }
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidSpec("min_samples_split must be ≥ 2".into()));
        }
        if let FeatureRule::Count(0) = self.feature_rule {
            return Err(Error::InvalidSpec("feature count per split must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Which learner a model specification asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    RandomForest,
    GradBoost,
    /// The boosting engine with L2 leaf-weight regularization (lambda 1).
    XGradBoost,
    Modal,
}

fn d_n_trees() -> usize {
    100
}
fn d_n_rounds() -> usize {
    100
}
fn d_learning_rate() -> f64 {
    0.1
}
fn d_min_samples_split() -> usize {
    2
}

/// Everything needed to fit a model: learner choice, its parameters, and
/// whether to wrap it in the ordinal binary decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub learner: LearnerKind,
    #[serde(default)]
    pub ordinal: bool,
    #[serde(default = "d_n_trees")]
    pub n_trees: usize,
    #[serde(default = "d_n_rounds")]
    pub n_rounds: usize,
    #[serde(default = "d_learning_rate")]
    pub learning_rate: f64,
    /// `None` means the learner default: unlimited for the forest, 3 for
    /// the boosting variants.
    #[serde(default)]
    pub max_depth: Option<u32>,
    #[serde(default = "d_min_samples_split")]
    pub min_samples_split: usize,
}

impl ModelSpec {
    pub fn new(learner: LearnerKind) -> Self {
        ModelSpec {
            learner,
            ordinal: false,
            n_trees: d_n_trees(),
            n_rounds: d_n_rounds(),
            learning_rate: d_learning_rate(),
            max_depth: None,
            min_samples_split: d_min_samples_split(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::InvalidSpec("n_trees must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidSpec("learning_rate must be positive".into()));
        }
        self.tree_params().validate()
    }

    /// Classification-tree parameters implied by this spec (forest path).
    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            feature_rule: FeatureRule::Sqrt,
            impurity: Impurity::Gini,
        }
    }

    /// Regression-tree parameters implied by this spec (boosting path).
    pub fn reg_params(&self) -> RegParams {
        RegParams {
            max_depth: self.max_depth.unwrap_or(3),
            min_samples_split: self.min_samples_split,
            leaf_lambda: if self.learner == LearnerKind::XGradBoost { 1.0 } else { 0.0 },
        }
    }
}

/// Per-class probabilities, ordered like the model's class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector {
    pub probs: Vec<f64>,
}

impl ProbVector {
    /// Index of the highest probability; ties keep the first (and, since
    /// classes are stored ascending, the lower class).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    /// The winning probability: the confidence attached to the prediction.
    pub fn confidence(&self) -> f64 {
        self.probs[self.argmax()]
    }
}

/// Constant classifier predicting the modal training class everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModalModel {
    pub classes: Vec<u8>,
    pub dist: Vec<f64>,
    pub n_cols: usize,
}

/// Fits the modal baseline: probabilities are the training class
/// frequencies, so the argmax (ties toward the lower class) is the mode.
pub fn baseline_modal(labels: &[u8], n_cols: usize) -> Result<ModalModel> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("baseline_modal"));
    }
    let classes = distinct_classes(labels);
    let mut counts = vec![0u64; classes.len()];
    for &l in labels {
        let c = classes.binary_search(&l).expect("label is a class");
        counts[c] += 1;
    }
    let n = labels.len() as f64;
    Ok(ModalModel {
        classes,
        dist: counts.iter().map(|&c| c as f64 / n).collect(),
        n_cols,
    })
}

/// Sorted distinct classes appearing in a label list.
pub fn distinct_classes(labels: &[u8]) -> Vec<u8> {
    let mut classes: Vec<u8> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    classes
}

/// Maps labels to indices into a sorted class list.
pub(crate) fn class_indices(labels: &[u8], classes: &[u8]) -> Result<Vec<u32>> {
    labels
        .iter()
        .map(|l| {
            classes
                .binary_search(l)
                .map(|i| i as u32)
                .map_err(|_| Error::InvalidSpec(format!("label {l} is not one of the classes")))
        })
        .collect()
}

/// A fitted classifier of any supported kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Model {
    Forest(ForestModel),
    Boost(BoostModel),
    Modal(ModalModel),
    Ordinal(OrdinalModel),
}

impl Model {
    /// Ascending class list the probability vectors align with.
    pub fn classes(&self) -> &[u8] {
        match self {
            Model::Forest(m) => &m.classes,
            Model::Boost(m) => &m.classes,
            Model::Modal(m) => &m.classes,
            Model::Ordinal(m) => &m.classes,
        }
    }

    fn expected_cols(&self) -> usize {
        match self {
            Model::Forest(m) => m.n_cols,
            Model::Boost(m) => m.n_cols,
            Model::Modal(m) => m.n_cols,
            Model::Ordinal(m) => m.n_cols,
        }
    }

    /// Per-row class probabilities over `classes()`.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Result<Vec<ProbVector>> {
        let expected = self.expected_cols();
        if matrix.n_cols() != expected {
            return Err(Error::ColumnMismatch { expected, actual: matrix.n_cols() });
        }
        Ok(match self {
            Model::Forest(m) => m.predict_proba(matrix),
            Model::Boost(m) => m.predict_proba(matrix),
            Model::Modal(m) => {
                (0..matrix.n_rows()).map(|_| ProbVector { probs: m.dist.clone() }).collect()
            }
            Model::Ordinal(m) => m.predict_proba(matrix)?,
        })
    }

    /// Predicted class per row: argmax with ties toward the lower class.
    pub fn predict_class(&self, matrix: &FeatureMatrix) -> Result<Vec<u8>> {
        let classes = self.classes();
        Ok(self
            .predict_proba(matrix)?
            .iter()
            .map(|p| classes[p.argmax()])
            .collect())
    }
}

/// Fits the model a spec describes. `classes` is the label scheme's full
/// ordered class list; the ordinal wrapper derives its binary cut tasks
/// from it, while flat learners work off the classes observed in `labels`.
pub fn fit_model(
    spec: &ModelSpec,
    matrix: &FeatureMatrix,
    labels: &[u8],
    classes: &[u8],
    seed: u64,
) -> Result<Model> {
    spec.validate()?;
    if labels.len() != matrix.n_rows() {
        return Err(Error::InvalidSpec(format!(
            "label count ({}) does not match matrix rows ({})",
            labels.len(),
            matrix.n_rows()
        )));
    }
    if spec.ordinal {
        return Ok(Model::Ordinal(fit_ordinal(spec, matrix, labels, classes, seed)?));
    }
    fit_flat(spec, matrix, labels, seed)
}

/// Fits the spec's learner without the ordinal wrapper.
pub(crate) fn fit_flat(
    spec: &ModelSpec,
    matrix: &FeatureMatrix,
    labels: &[u8],
    seed: u64,
) -> Result<Model> {
    Ok(match spec.learner {
        LearnerKind::RandomForest => Model::Forest(fit_forest(
            matrix,
            labels,
            spec.n_trees,
            &spec.tree_params(),
            seed,
        )?),
        LearnerKind::GradBoost | LearnerKind::XGradBoost => Model::Boost(fit_boost(
            matrix,
            labels,
            spec.n_rounds,
            spec.learning_rate,
            &spec.reg_params(),
        )?),
        LearnerKind::Modal => Model::Modal(baseline_modal(labels, matrix.n_cols())?),
    })
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: Model,
}

/// Serializes a model as self-describing JSON with a format version.
pub fn save_model<W: Write>(model: &Model, writer: &mut W) -> Result<()> {
    let file = ModelFile { format_version: MODEL_FORMAT_VERSION, model: model.clone() };
    serde_json::to_writer(&mut *writer, &file)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Loads a model saved by [`save_model`], checking the format version.
pub fn load_model<R: Read>(reader: R) -> Result<Model> {
    let file: ModelFile = serde_json::from_reader(reader)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::InvalidSpec(format!(
            "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    Ok(file.model)
}
