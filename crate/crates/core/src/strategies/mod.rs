//! Deployment strategies for mixing human scoring with model predictions.
//!
//! Strategy 1 scores a fixed random fraction by hand and predicts the rest.
//! Strategy 2 additionally keeps only the predictions confident enough to
//! clear an accuracy threshold, ranked by class probability. Strategy 3
//! (in [`active`]) grows the hand-scored set batch by batch, always asking
//! humans about the articles the current model is least sure of.
//!
//! All strategies share the same discipline: field-year citation statistics
//! and the selected text vocabulary are refitted on hand-scored rows only,
//! never on rows the model will be asked about. Splits that lose an entire
//! class are redrawn once and flagged; a second degenerate draw is an error.

pub mod active;

use std::collections::BTreeSet;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{ArticleRecord, LabelScheme};
use crate::error::{Error, Result};
use crate::features::{
    article_terms, build_matrix_with_terms, compute_imputations, select_features, FeatureMatrix,
    FeatureStats, Imputations, InputSet, Term, Vocabulary,
};
use crate::learners::{distinct_classes, fit_model, Model, ModelSpec};
use crate::mix_seed;

fn d_n_iterations() -> usize {
    10
}

/// How to split a fully labeled corpus into hand-scored and predicted rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitPlan {
    /// Fraction of articles whose human score is kept for training.
    pub train_fraction: f64,
    #[serde(default = "d_n_iterations")]
    pub n_iterations: usize,
    pub seed: u64,
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "train_fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.n_iterations == 0 {
            return Err(Error::InvalidSpec("n_iterations must be ≥ 1".to_owned()));
        }
        Ok(())
    }
}

/// Feature-space choices shared by every iteration of a strategy run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturePlan {
    pub input_set: InputSet,
    /// Total feature budget (dense + selected text columns) when the input
    /// set includes text.
    #[serde(default = "FeaturePlan::d_k_total")]
    pub k_total: usize,
}

impl FeaturePlan {
    fn d_k_total() -> usize {
        1000
    }
}

impl Default for FeaturePlan {
    fn default() -> Self {
        FeaturePlan { input_set: InputSet::WithText, k_total: Self::d_k_total() }
    }
}

/// Who produced the score an article carries in one iteration's outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Human,
    Ai,
}

/// One article's scored state within a single iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticlePrediction {
    pub article_id: String,
    /// Class id that stands for this article: the human score for
    /// human-scored rows, the model's argmax class otherwise.
    pub predicted: u8,
    /// Max-class probability for model predictions; 1.0 for human rows.
    pub confidence: f64,
    pub provenance: Provenance,
}

/// Threshold bookkeeping recorded by strategy 2 per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy2Iteration {
    pub threshold: f64,
    /// Articles accepted in evaluation mode: the longest
    /// confidence-ranked prefix whose cumulative realized accuracy clears
    /// the threshold.
    pub eval_count: usize,
    pub eval_accuracy: Option<f64>,
    /// Articles accepted in deployment mode: estimated max-class
    /// probability at or above the threshold.
    pub deploy_count: usize,
    pub deploy_accuracy: Option<f64>,
    pub deploy_ids: Vec<String>,
    pub curve: Vec<CurvePoint>,
}

/// One train/predict iteration of a strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: usize,
    pub model_id: String,
    /// True when the first split draw was missing a class and was redrawn.
    pub resampled: bool,
    /// Realized accuracy over every model-predicted holdout row.
    pub test_accuracy: Option<f64>,
    /// Realized accuracy over the rows that ended up AI-scored.
    pub ai_accuracy: Option<f64>,
    pub n_human: usize,
    pub n_ai: usize,
    /// One entry per corpus row, in corpus order.
    pub predictions: Vec<ArticlePrediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<Strategy2Iteration>,
}

/// Aggregate of a full strategy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub iterations: Vec<IterationResult>,
    /// Mean/min/max of per-iteration test accuracy; `None` when no
    /// iteration produced a defined accuracy.
    pub accuracy_mean: Option<f64>,
    pub accuracy_min: Option<f64>,
    pub accuracy_max: Option<f64>,
}

fn aggregate(iterations: Vec<IterationResult>) -> StrategyOutcome {
    let accs: Vec<f64> = iterations.iter().filter_map(|it| it.test_accuracy).collect();
    let (mean, min, max) = if accs.is_empty() {
        (None, None, None)
    } else {
        (
            Some(accs.iter().sum::<f64>() / accs.len() as f64),
            Some(accs.iter().copied().fold(f64::INFINITY, f64::min)),
            Some(accs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        )
    };
    StrategyOutcome { iterations, accuracy_mean: mean, accuracy_min: min, accuracy_max: max }
}

/// A labeled corpus with everything precomputed that does not depend on
/// which rows end up hand-scored: tokenized term sets and the imputation
/// fills for optional dense features.
pub struct PreparedCorpus<'a> {
    pub articles: &'a [ArticleRecord],
    pub scheme: LabelScheme,
    /// Class id per article under the scheme.
    pub labels: Vec<u8>,
    /// Classes that occur anywhere in the corpus; every training split
    /// must contain all of them.
    pub required_classes: Vec<u8>,
    term_sets: Vec<BTreeSet<Term>>,
    imputations: Imputations,
    input_set: InputSet,
    k_total: usize,
}

impl<'a> PreparedCorpus<'a> {
    /// Tokenizes and imputes once up front. Every article must carry a
    /// human score: the strategies treat the labels as both training data
    /// and the held-out oracle.
    pub fn new(
        articles: &'a [ArticleRecord],
        scheme: LabelScheme,
        plan: &FeaturePlan,
    ) -> Result<Self> {
        if articles.is_empty() {
            return Err(Error::EmptyInput("strategy corpus"));
        }
        let mut labels = Vec::with_capacity(articles.len());
        for (row, a) in articles.iter().enumerate() {
            match a.score {
                Some(s) => labels.push(scheme.class_of(s)),
                None => {
                    return Err(Error::Value {
                        row,
                        field: "score",
                        message: format!("article {}: strategies need every row labeled", a.id),
                    })
                }
            }
        }
        let term_sets = if plan.input_set == InputSet::WithText {
            articles.iter().map(article_terms).collect()
        } else {
            Vec::new()
        };
        let required_classes = distinct_classes(&labels);
        Ok(PreparedCorpus {
            articles,
            scheme,
            labels,
            required_classes,
            term_sets,
            imputations: compute_imputations(articles),
            input_set: plan.input_set,
            k_total: plan.k_total,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.articles.len()
    }

    /// Refits citation statistics (and the text vocabulary, for the text
    /// input set) on the given training rows, then builds the full-corpus
    /// matrix against them. Rows outside the training cells fall back to
    /// the training global mean rather than erroring, so articles from
    /// unseen field-year cells (e.g. other publication years) stay
    /// predictable.
    pub fn build_for_training(&self, train_rows: &[usize]) -> Result<FeatureMatrix> {
        let stats = FeatureStats::fit_rows(self.articles, train_rows)?;
        let vocabulary = self.select_vocabulary(train_rows)?;
        build_matrix_with_terms(
            self.articles,
            &self.term_sets,
            self.input_set,
            &stats,
            vocabulary.as_ref(),
            &self.imputations,
            true,
        )
    }

    fn select_vocabulary(&self, train_rows: &[usize]) -> Result<Option<Vocabulary>> {
        if self.input_set != InputSet::WithText {
            return Ok(None);
        }
        let train_terms: Vec<BTreeSet<Term>> =
            train_rows.iter().map(|&r| self.term_sets[r].clone()).collect();
        let train_labels: Vec<u8> = train_rows.iter().map(|&r| self.labels[r]).collect();
        select_features(&train_terms, &train_labels, self.k_total, self.input_set.n_dense())
            .map(Some)
    }
}

/// Number of training rows a fraction implies, clamped so both sides of
/// the split stay nonempty.
fn train_size(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

fn missing_class(labels: &[u8], rows: &[usize], required: &[u8]) -> Option<u8> {
    required
        .iter()
        .copied()
        .find(|&c| !rows.iter().any(|&r| labels[r] == c))
}

/// Draws a uniform train subset of `pool`, redrawing once if a required
/// class is absent. Returns sorted global row indices for both sides plus
/// the resample flag.
fn draw_split(
    pool: &[usize],
    n_train: usize,
    labels: &[u8],
    required: &[u8],
    rng: &mut ChaCha8Rng,
    iteration: usize,
) -> Result<(Vec<usize>, Vec<usize>, bool)> {
    let mut resampled = false;
    for attempt in 0..2 {
        let picks = rand::seq::index::sample(rng, pool.len(), n_train);
        let mut chosen = vec![false; pool.len()];
        for p in picks {
            chosen[p] = true;
        }
        let train: Vec<usize> =
            (0..pool.len()).filter(|&p| chosen[p]).map(|p| pool[p]).collect();
        match missing_class(labels, &train, required) {
            None => {
                let heldout: Vec<usize> =
                    (0..pool.len()).filter(|&p| !chosen[p]).map(|p| pool[p]).collect();
                return Ok((train, heldout, resampled));
            }
            Some(class) => {
                if attempt == 1 {
                    return Err(Error::DegenerateSplit { iteration, class });
                }
                resampled = true;
            }
        }
    }
    unreachable!("split drawing loops exactly twice")
}

struct FittedSplit {
    matrix: FeatureMatrix,
    model: Model,
}

fn fit_on_rows(
    prepared: &PreparedCorpus,
    model_spec: &ModelSpec,
    train_rows: &[usize],
    model_seed: u64,
) -> Result<FittedSplit> {
    let matrix = prepared.build_for_training(train_rows)?;
    let train_labels: Vec<u8> = train_rows.iter().map(|&r| prepared.labels[r]).collect();
    let model = fit_model(
        model_spec,
        &matrix.subset(train_rows),
        &train_labels,
        prepared.scheme.classes(),
        model_seed,
    )?;
    Ok(FittedSplit { matrix, model })
}

fn predict_rows(fitted: &FittedSplit, rows: &[usize]) -> Result<(Vec<u8>, Vec<f64>)> {
    let probs = fitted.model.predict_proba(&fitted.matrix.subset(rows))?;
    let classes = fitted.model.classes();
    let mut preds = Vec::with_capacity(rows.len());
    let mut confs = Vec::with_capacity(rows.len());
    for p in probs {
        preds.push(classes[p.argmax()]);
        confs.push(p.confidence());
    }
    Ok((preds, confs))
}

fn fraction_correct(preds: &[u8], labels: &[u8], rows: &[usize]) -> Option<f64> {
    if rows.is_empty() {
        return None;
    }
    let hits = rows.iter().zip(preds).filter(|(&r, &p)| labels[r] == p).count();
    Some(hits as f64 / rows.len() as f64)
}

/// Builds the per-article record list for one iteration: human rows keep
/// their oracle class at confidence 1, AI rows carry the model output.
fn assemble_predictions(
    prepared: &PreparedCorpus,
    ai_rows: &[usize],
    preds: &[u8],
    confs: &[f64],
) -> Vec<ArticlePrediction> {
    let mut out: Vec<ArticlePrediction> = prepared
        .articles
        .iter()
        .zip(&prepared.labels)
        .map(|(a, &label)| ArticlePrediction {
            article_id: a.id.clone(),
            predicted: label,
            confidence: 1.0,
            provenance: Provenance::Human,
        })
        .collect();
    for (i, &row) in ai_rows.iter().enumerate() {
        out[row] = ArticlePrediction {
            article_id: prepared.articles[row].id.clone(),
            predicted: preds[i],
            confidence: confs[i],
            provenance: Provenance::Ai,
        };
    }
    out
}

/// Strategy 1: hand-score a random fraction, predict everything else.
///
/// Each iteration draws its own split, refits statistics, vocabulary and
/// model on the training rows, and predicts the holdout. Iterations run in
/// parallel but derive their randomness from per-iteration seeds, so the
/// outcome is identical at any thread count.
pub fn run_strategy1(
    articles: &[ArticleRecord],
    scheme: LabelScheme,
    feature_plan: &FeaturePlan,
    model_spec: &ModelSpec,
    plan: &SplitPlan,
) -> Result<StrategyOutcome> {
    plan.validate()?;
    let prepared = PreparedCorpus::new(articles, scheme, feature_plan)?;
    let pool: Vec<usize> = (0..prepared.n_rows()).collect();
    let n_train = train_size(pool.len(), plan.train_fraction);

    let iterations: Vec<IterationResult> = (0..plan.n_iterations)
        .into_par_iter()
        .map(|iteration| {
            let iter_seed = mix_seed(plan.seed, iteration as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(iter_seed);
            let (train_rows, test_rows, resampled) = draw_split(
                &pool,
                n_train,
                &prepared.labels,
                &prepared.required_classes,
                &mut rng,
                iteration,
            )?;
            let fitted = fit_on_rows(&prepared, model_spec, &train_rows, mix_seed(iter_seed, 1))?;
            let (preds, confs) = predict_rows(&fitted, &test_rows)?;
            let accuracy = fraction_correct(&preds, &prepared.labels, &test_rows);
            let predictions = assemble_predictions(&prepared, &test_rows, &preds, &confs);
            Ok(IterationResult {
                iteration,
                model_id: format!("s1-it{iteration:03}"),
                resampled,
                test_accuracy: accuracy,
                ai_accuracy: accuracy,
                n_human: train_rows.len(),
                n_ai: test_rows.len(),
                predictions,
                s2: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(iterations))
}

/// One point of a cumulative-accuracy curve: the realized accuracy of the
/// `n` most confident predictions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub accuracy: f64,
}

/// One model prediction with everything the ranking needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    pub article_id: String,
    pub confidence: f64,
    pub correct: bool,
}

/// Indices of `items` in ranking order: confidence descending, ties broken
/// by article id ascending.
fn ranked_order(items: &[RankedPrediction]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        items[b]
            .confidence
            .total_cmp(&items[a].confidence)
            .then_with(|| items[a].article_id.cmp(&items[b].article_id))
    });
    order
}

/// Cumulative accuracy of the `n` most confident predictions, for every
/// prefix length `n`. Empty input yields an empty curve.
pub fn prob_accuracy_curve(items: &[RankedPrediction]) -> Vec<CurvePoint> {
    let order = ranked_order(items);
    let mut curve = Vec::with_capacity(items.len());
    let mut hits = 0usize;
    for (i, &idx) in order.iter().enumerate() {
        if items[idx].correct {
            hits += 1;
        }
        curve.push(CurvePoint { n: i + 1, accuracy: hits as f64 / (i + 1) as f64 });
    }
    curve
}

/// Largest prefix length whose cumulative accuracy clears the threshold;
/// 0 when no prefix does.
pub fn count_at_threshold(curve: &[CurvePoint], threshold: f64) -> usize {
    curve
        .iter()
        .filter(|p| p.accuracy >= threshold)
        .map(|p| p.n)
        .max()
        .unwrap_or(0)
}

/// Strategy 2: like strategy 1, but only predictions confident enough to
/// clear `threshold` count as AI-scored; the rest go back to humans.
///
/// Evaluation mode picks the longest confidence-ranked prefix whose
/// realized cumulative accuracy clears the threshold (the oracle curve).
/// Deployment mode instead keeps predictions whose estimated max-class
/// probability clears it; both sets and their realized accuracies are
/// recorded, with evaluation mode driving the outcome's provenance.
pub fn run_strategy2(
    articles: &[ArticleRecord],
    scheme: LabelScheme,
    feature_plan: &FeaturePlan,
    model_spec: &ModelSpec,
    plan: &SplitPlan,
    threshold: f64,
) -> Result<StrategyOutcome> {
    plan.validate()?;
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "strategy 2 threshold must be positive and finite, got {threshold}"
        )));
    }
    let prepared = PreparedCorpus::new(articles, scheme, feature_plan)?;
    let pool: Vec<usize> = (0..prepared.n_rows()).collect();
    let n_train = train_size(pool.len(), plan.train_fraction);

    let iterations: Vec<IterationResult> = (0..plan.n_iterations)
        .into_par_iter()
        .map(|iteration| {
            let iter_seed = mix_seed(plan.seed, iteration as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(iter_seed);
            let (train_rows, test_rows, resampled) = draw_split(
                &pool,
                n_train,
                &prepared.labels,
                &prepared.required_classes,
                &mut rng,
                iteration,
            )?;
            let fitted = fit_on_rows(&prepared, model_spec, &train_rows, mix_seed(iter_seed, 1))?;
            let (preds, confs) = predict_rows(&fitted, &test_rows)?;
            let test_accuracy = fraction_correct(&preds, &prepared.labels, &test_rows);

            let items: Vec<RankedPrediction> = test_rows
                .iter()
                .enumerate()
                .map(|(i, &row)| RankedPrediction {
                    article_id: prepared.articles[row].id.clone(),
                    confidence: confs[i],
                    correct: preds[i] == prepared.labels[row],
                })
                .collect();
            let order = ranked_order(&items);
            let curve = prob_accuracy_curve(&items);
            let eval_count = count_at_threshold(&curve, threshold);

            // Evaluation mode: accept the qualifying prefix of the ranking.
            let ai_positions: Vec<usize> = order[..eval_count].to_vec();
            let ai_rows: Vec<usize> = ai_positions.iter().map(|&p| test_rows[p]).collect();
            let ai_preds: Vec<u8> = ai_positions.iter().map(|&p| preds[p]).collect();
            let ai_confs: Vec<f64> = ai_positions.iter().map(|&p| confs[p]).collect();
            let eval_accuracy =
                if eval_count == 0 { None } else { Some(curve[eval_count - 1].accuracy) };

            // Deployment mode: accept whatever claims to clear the bar.
            let deploy_positions: Vec<usize> =
                (0..items.len()).filter(|&i| confs[i] >= threshold).collect();
            let deploy_rows: Vec<usize> =
                deploy_positions.iter().map(|&p| test_rows[p]).collect();
            let deploy_preds: Vec<u8> = deploy_positions.iter().map(|&p| preds[p]).collect();
            let deploy_accuracy =
                fraction_correct(&deploy_preds, &prepared.labels, &deploy_rows);
            let mut deploy_ids: Vec<String> = deploy_positions
                .iter()
                .map(|&p| items[p].article_id.clone())
                .collect();
            deploy_ids.sort();

            let predictions = assemble_predictions(&prepared, &ai_rows, &ai_preds, &ai_confs);
            Ok(IterationResult {
                iteration,
                model_id: format!("s2-it{iteration:03}"),
                resampled,
                test_accuracy,
                ai_accuracy: eval_accuracy,
                n_human: prepared.n_rows() - ai_rows.len(),
                n_ai: ai_rows.len(),
                predictions,
                s2: Some(Strategy2Iteration {
                    threshold,
                    eval_count,
                    eval_accuracy,
                    deploy_count: deploy_rows.len(),
                    deploy_accuracy,
                    deploy_ids,
                    curve,
                }),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(iterations))
}

/// Accuracy of one calendar year under a model trained on another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearAccuracy {
    pub year: i32,
    pub n_articles: usize,
    /// Mean realized accuracy over iterations; `None` for skipped years.
    pub accuracy_mean: Option<f64>,
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossYearReport {
    pub train_year: i32,
    pub n_iterations: usize,
    pub years: Vec<YearAccuracy>,
}

/// Trains on half of `train_year` and measures accuracy on the held-out
/// half plus every article of each other requested year, averaged over
/// `n_iterations` random halvings. Years with no articles are reported as
/// skipped rather than failing the run.
pub fn cross_year(
    articles: &[ArticleRecord],
    scheme: LabelScheme,
    feature_plan: &FeaturePlan,
    model_spec: &ModelSpec,
    train_year: i32,
    test_years: &[i32],
    n_iterations: usize,
    seed: u64,
) -> Result<CrossYearReport> {
    if n_iterations == 0 {
        return Err(Error::InvalidSpec("n_iterations must be ≥ 1".to_owned()));
    }
    let prepared = PreparedCorpus::new(articles, scheme, feature_plan)?;
    let train_pool: Vec<usize> = (0..prepared.n_rows())
        .filter(|&r| prepared.articles[r].year == train_year)
        .collect();
    if train_pool.is_empty() {
        return Err(Error::EmptyInput("cross_year training year"));
    }
    let required: Vec<u8> =
        distinct_classes(&train_pool.iter().map(|&r| prepared.labels[r]).collect::<Vec<u8>>());
    let n_train = train_size(train_pool.len(), 0.5);

    let mut year_list: Vec<i32> = vec![train_year];
    for &y in test_years {
        if y != train_year && !year_list.contains(&y) {
            year_list.push(y);
        }
    }
    let other_rows: Vec<Vec<usize>> = year_list
        .iter()
        .map(|&y| {
            (0..prepared.n_rows())
                .filter(|&r| y != train_year && prepared.articles[r].year == y)
                .collect()
        })
        .collect();

    // Per iteration, an accuracy per listed year (train year = holdout half).
    let per_iter: Vec<Vec<Option<f64>>> = (0..n_iterations)
        .into_par_iter()
        .map(|iteration| {
            let iter_seed = mix_seed(seed, iteration as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(iter_seed);
            let (train_rows, heldout, _resampled) = draw_split(
                &train_pool,
                n_train,
                &prepared.labels,
                &required,
                &mut rng,
                iteration,
            )?;
            let fitted = fit_on_rows(&prepared, model_spec, &train_rows, mix_seed(iter_seed, 1))?;
            let mut accs = Vec::with_capacity(year_list.len());
            for (slot, &year) in year_list.iter().enumerate() {
                let rows: &[usize] =
                    if year == train_year { &heldout } else { &other_rows[slot] };
                if rows.is_empty() {
                    accs.push(None);
                } else {
                    let (preds, _confs) = predict_rows(&fitted, rows)?;
                    accs.push(fraction_correct(&preds, &prepared.labels, rows));
                }
            }
            Ok(accs)
        })
        .collect::<Result<Vec<_>>>()?;

    let years = year_list
        .iter()
        .enumerate()
        .map(|(slot, &year)| {
            let n_articles = if year == train_year {
                train_pool.len()
            } else {
                other_rows[slot].len()
            };
            let values: Vec<f64> = per_iter.iter().filter_map(|accs| accs[slot]).collect();
            let (mean, skipped) = if values.is_empty() {
                (None, true)
            } else {
                (Some(values.iter().sum::<f64>() / values.len() as f64), false)
            };
            YearAccuracy { year, n_articles, accuracy_mean: mean, skipped }
        })
        .collect();
    Ok(CrossYearReport { train_year, n_iterations, years })
}

/// JSON export of an outcome: per iteration, a map from article id to its
/// scored state, plus the aggregate accuracies.
pub fn outcome_to_json(outcome: &StrategyOutcome) -> serde_json::Value {
    let iterations: Vec<serde_json::Value> = outcome
        .iterations
        .iter()
        .map(|it| {
            let articles: serde_json::Map<String, serde_json::Value> = it
                .predictions
                .iter()
                .map(|p| {
                    (
                        p.article_id.clone(),
                        json!({
                            "pred": p.predicted,
                            "conf": p.confidence,
                            "provenance": match p.provenance {
                                Provenance::Human => "human",
                                Provenance::Ai => "ai",
                            },
                        }),
                    )
                })
                .collect();
            json!({
                "iteration": it.iteration,
                "model_id": it.model_id,
                "resampled": it.resampled,
                "test_accuracy": it.test_accuracy,
                "ai_accuracy": it.ai_accuracy,
                "n_human": it.n_human,
                "n_ai": it.n_ai,
                "articles": articles,
            })
        })
        .collect();
    json!({
        "iterations": iterations,
        "accuracy_mean": outcome.accuracy_mean,
        "accuracy_min": outcome.accuracy_min,
        "accuracy_max": outcome.accuracy_max,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One summary row per iteration: counts and realized accuracies.
pub fn outcome_summary_csv<W: Write>(outcome: &StrategyOutcome, writer: &mut W) -> Result<()> {
    writeln!(writer, "iteration,model_id,resampled,n_human,n_ai,test_accuracy,ai_accuracy")?;
    for it in &outcome.iterations {
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            it.iteration,
            it.model_id,
            it.resampled,
            it.n_human,
            it.n_ai,
            fmt_opt(it.test_accuracy),
            fmt_opt(it.ai_accuracy),
        )?;
    }
    Ok(())
}

/// Curve rows as `n,accuracy`, one per prefix length.
pub fn curve_to_csv<W: Write>(curve: &[CurvePoint], writer: &mut W) -> Result<()> {
    writeln!(writer, "n,accuracy")?;
    for p in curve {
        writeln!(writer, "{},{}", p.n, p.accuracy)?;
    }
    Ok(())
}
