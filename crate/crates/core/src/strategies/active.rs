//! Batch active learning: humans label batches, the model picks which.
//!
//! Round 0 labels a random batch. Every later round hands the humans the
//! batch of remaining articles the current model is least confident about
//! (lowest max-class probability). After each round the remainder's
//! realized accuracy is checked against a threshold: clearing it stops the
//! loop and AI-scores the remainder; running out of batches instead sends
//! everything left to the humans, with no AI predictions at all.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    aggregate, assemble_predictions, fraction_correct, missing_class, predict_rows, ArticleRecord,
    FeaturePlan, FittedSplit, IterationResult, LabelScheme, PreparedCorpus, StrategyOutcome,
};
use crate::error::{Error, Result};
use crate::features::build_matrix_with_terms;
use crate::features::FeatureStats;
use crate::learners::{fit_model, ModelSpec};
use crate::mix_seed;

fn d_batch_fraction() -> f64 {
    0.10
}
fn d_accuracy_threshold() -> f64 {
    0.85
}
fn d_max_batches() -> usize {
    9
}
fn d_true() -> bool {
    true
}

/// Knobs of the active-learning loop. Confidence is always the max-class
/// probability of the current model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActiveLearningConfig {
    #[serde(default = "d_batch_fraction")]
    pub batch_fraction: f64,
    #[serde(default = "d_accuracy_threshold")]
    pub accuracy_threshold: f64,
    #[serde(default = "d_max_batches")]
    pub max_batches: usize,
    /// Re-select the text vocabulary on the labeled rows every round; when
    /// false, the round-0 vocabulary is frozen for the whole run.
    #[serde(default = "d_true")]
    pub refresh_features: bool,
}

impl Default for ActiveLearningConfig {
    fn default() -> Self {
        ActiveLearningConfig {
            batch_fraction: d_batch_fraction(),
            accuracy_threshold: d_accuracy_threshold(),
            max_batches: d_max_batches(),
            refresh_features: d_true(),
        }
    }
}

impl ActiveLearningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 0.5) {
            return Err(Error::InvalidSpec(format!(
                "batch_fraction must lie in (0, 0.5], got {}",
                self.batch_fraction
            )));
        }
        if !(self.accuracy_threshold > 0.5 && self.accuracy_threshold <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "accuracy_threshold must lie in (0.5, 1], got {}",
                self.accuracy_threshold
            )));
        }
        if self.max_batches == 0 {
            return Err(Error::InvalidSpec("max_batches must be ≥ 1".to_owned()));
        }
        Ok(())
    }
}

/// One labeling round of the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlRound {
    pub round: usize,
    /// Articles sent to the humans this round, id-sorted.
    pub selected_ids: Vec<String>,
    /// Cumulative labeled count after this round.
    pub labeled_size: usize,
    /// Mean max-class probability over the remainder — the accuracy the
    /// model itself claims.
    pub estimated_remainder_accuracy: Option<f64>,
    /// Oracle-checked accuracy over the remainder.
    pub realized_remainder_accuracy: Option<f64>,
    /// True when the loop ended after this round.
    pub stopped: bool,
}

/// Why the loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StopReason {
    /// Realized remainder accuracy cleared the threshold after this round;
    /// the remainder was AI-scored.
    ThresholdReached { round: usize },
    /// The batch budget ran out; everything left went to the humans.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlTrace {
    pub batch_size: usize,
    pub rounds: Vec<AlRound>,
    pub stop: StopReason,
}

/// Runs the loop. Returns the per-round trace and a single-iteration
/// outcome whose provenance reflects the final human/AI split.
pub fn run_active_learning(
    articles: &[ArticleRecord],
    scheme: LabelScheme,
    feature_plan: &FeaturePlan,
    model_spec: &ModelSpec,
    config: &ActiveLearningConfig,
    seed: u64,
) -> Result<(AlTrace, StrategyOutcome)> {
    config.validate()?;
    let prepared = PreparedCorpus::new(articles, scheme, feature_plan)?;
    let n = prepared.n_rows();
    let batch_size = ((n as f64 * config.batch_fraction).round() as usize).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labeled_mask = vec![false; n];
    let mut labeled: Vec<usize> = Vec::new();
    let mut remainder: Vec<usize> = (0..n).collect();
    // Confidence per remainder row under the latest model, used to pick
    // the next batch.
    let mut last_confs: Vec<f64> = Vec::new();
    let mut frozen_vocab = None;
    let mut round0_resampled = false;

    let mut rounds: Vec<AlRound> = Vec::new();
    let mut stop: Option<StopReason> = None;
    // Final model output over the remainder, kept for AI provenance.
    let mut final_preds: Vec<u8> = Vec::new();
    let mut final_confs: Vec<f64> = Vec::new();

    for round in 0..config.max_batches {
        let batch: Vec<usize> = if round == 0 {
            let take = batch_size.min(n);
            let mut attempt_batch: Vec<usize> = Vec::new();
            for attempt in 0..2 {
                let picks = rand::seq::index::sample(&mut rng, n, take);
                let mut rows: Vec<usize> = picks.into_iter().collect();
                rows.sort_unstable();
                match missing_class(&prepared.labels, &rows, &prepared.required_classes) {
                    None => {
                        attempt_batch = rows;
                        break;
                    }
                    Some(class) => {
                        if attempt == 1 {
                            return Err(Error::DegenerateSplit { iteration: 0, class });
                        }
                        round0_resampled = true;
                    }
                }
            }
            attempt_batch
        } else {
            let mut order: Vec<usize> = (0..remainder.len()).collect();
            order.sort_by(|&a, &b| {
                last_confs[a]
                    .total_cmp(&last_confs[b])
                    .then_with(|| {
                        prepared.articles[remainder[a]]
                            .id
                            .cmp(&prepared.articles[remainder[b]].id)
                    })
            });
            let take = batch_size.min(remainder.len());
            let mut rows: Vec<usize> = order[..take].iter().map(|&p| remainder[p]).collect();
            rows.sort_unstable();
            rows
        };

        for &row in &batch {
            labeled_mask[row] = true;
        }
        labeled.extend(&batch);
        labeled.sort_unstable();
        remainder = (0..n).filter(|&r| !labeled_mask[r]).collect();

        // Fit on everything labeled so far.
        let stats = FeatureStats::fit_rows(prepared.articles, &labeled)?;
        let vocabulary = if config.refresh_features || round == 0 {
            let v = prepared.select_vocabulary(&labeled)?;
            if round == 0 {
                frozen_vocab = v.clone();
            }
            v
        } else {
            frozen_vocab.clone()
        };
        let matrix = build_matrix_with_terms(
            prepared.articles,
            &prepared.term_sets,
            prepared.input_set,
            &stats,
            vocabulary.as_ref(),
            &prepared.imputations,
            true,
        )?;
        let labeled_labels: Vec<u8> = labeled.iter().map(|&r| prepared.labels[r]).collect();
        let model = fit_model(
            model_spec,
            &matrix.subset(&labeled),
            &labeled_labels,
            prepared.scheme.classes(),
            mix_seed(seed, 1 + round as u64),
        )?;
        let fitted = FittedSplit { matrix, model };

        let mut selected_ids: Vec<String> =
            batch.iter().map(|&r| prepared.articles[r].id.clone()).collect();
        selected_ids.sort();

        if remainder.is_empty() {
            rounds.push(AlRound {
                round,
                selected_ids,
                labeled_size: labeled.len(),
                estimated_remainder_accuracy: None,
                realized_remainder_accuracy: None,
                stopped: true,
            });
            stop = Some(StopReason::Exhausted);
            break;
        }

        let (preds, confs) = predict_rows(&fitted, &remainder)?;
        let estimated = confs.iter().sum::<f64>() / confs.len() as f64;
        let realized = fraction_correct(&preds, &prepared.labels, &remainder)
            .expect("remainder is nonempty");

        let threshold_met = realized >= config.accuracy_threshold;
        let out_of_budget = round + 1 == config.max_batches;
        rounds.push(AlRound {
            round,
            selected_ids,
            labeled_size: labeled.len(),
            estimated_remainder_accuracy: Some(estimated),
            realized_remainder_accuracy: Some(realized),
            stopped: threshold_met || out_of_budget,
        });

        if threshold_met {
            stop = Some(StopReason::ThresholdReached { round });
            final_preds = preds;
            final_confs = confs;
            break;
        }
        if out_of_budget {
            // Budget spent with at most one batch left: the humans label
            // the rest, and nothing is AI-scored.
            stop = Some(StopReason::Exhausted);
            break;
        }
        last_confs = confs;
    }

    let stop = stop.expect("the loop always records a stop reason");
    let (ai_rows, test_accuracy, ai_accuracy) = match stop {
        StopReason::ThresholdReached { .. } => {
            let acc = rounds.last().and_then(|r| r.realized_remainder_accuracy);
            (remainder.clone(), acc, acc)
        }
        StopReason::Exhausted => {
            (Vec::new(), rounds.last().and_then(|r| r.realized_remainder_accuracy), None)
        }
    };
    let predictions = assemble_predictions(&prepared, &ai_rows, &final_preds, &final_confs);
    let n_ai = ai_rows.len();
    let iteration = IterationResult {
        iteration: 0,
        model_id: format!("al-r{:02}", rounds.len() - 1),
        resampled: round0_resampled,
        test_accuracy,
        ai_accuracy,
        n_human: n - n_ai,
        n_ai,
        predictions,
        s2: None,
    };
    Ok((AlTrace { batch_size, rounds, stop }, aggregate(vec![iteration])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::minimal_record;
    use crate::corpus::LabelMode;
    use crate::features::InputSet;
    use crate::learners::LearnerKind;
    use crate::strategies::tests::separable_corpus;
    use crate::strategies::Provenance;

    fn forest_spec() -> ModelSpec {
        let mut spec = ModelSpec::new(LearnerKind::RandomForest);
        spec.n_trees = 20;
        spec
    }

    fn scheme() -> LabelScheme {
        LabelScheme::new(LabelMode::ThreeClass)
    }

    #[test]
    fn config_bounds_are_enforced() {
        assert!(ActiveLearningConfig::default().validate().is_ok());
        for (bf, at) in [(0.0, 0.85), (0.6, 0.85), (0.1, 0.5), (0.1, 1.2)] {
            let cfg = ActiveLearningConfig {
                batch_fraction: bf,
                accuracy_threshold: at,
                ..Default::default()
            };
            assert!(cfg.validate().is_err(), "({bf}, {at}) should be rejected");
        }
    }

    #[test]
    fn easy_data_stops_early_and_predicts_the_rest() {
        let articles = separable_corpus(20);
        let cfg = ActiveLearningConfig {
            batch_fraction: 0.2,
            accuracy_threshold: 0.85,
            max_batches: 4,
            refresh_features: true,
        };
        let (trace, outcome) = run_active_learning(
            &articles,
            scheme(),
            &FeaturePlan { input_set: InputSet::WithText, k_total: 40 },
            &forest_spec(),
            &cfg,
            17,
        )
        .unwrap();
        let round = match trace.stop {
            StopReason::ThresholdReached { round } => round,
            StopReason::Exhausted => panic!("separable data should stop early"),
        };
        let it = &outcome.iterations[0];
        assert_eq!(it.n_human, (round + 1) * trace.batch_size);
        assert_eq!(it.n_human + it.n_ai, articles.len());
        assert!(it.ai_accuracy.unwrap() >= 0.85);
        let ai_count =
            it.predictions.iter().filter(|p| p.provenance == Provenance::Ai).count();
        assert_eq!(ai_count, it.n_ai);
        assert!(it.n_ai > 0);
    }

    /// Identical feature rows with cycling labels: nothing to learn, so the
    /// loop must burn its whole budget and hand everything to the humans.
    fn unlearnable_corpus(n: usize) -> Vec<ArticleRecord> {
        (0..n)
            .map(|i| {
                let mut a = minimal_record(&format!("flat-{i:03}"));
                a.score = Some([2u8, 3, 4][i % 3]);
                a
            })
            .collect()
    }

    #[test]
    fn unlearnable_data_never_stops_early() {
        let articles = unlearnable_corpus(60);
        let cfg = ActiveLearningConfig {
            batch_fraction: 0.2,
            accuracy_threshold: 0.85,
            max_batches: 4,
            refresh_features: true,
        };
        let (trace, outcome) = run_active_learning(
            &articles,
            scheme(),
            &FeaturePlan { input_set: InputSet::BiblioOnly, k_total: 40 },
            &forest_spec(),
            &cfg,
            3,
        )
        .unwrap();
        assert_eq!(trace.stop, StopReason::Exhausted);
        assert_eq!(trace.rounds.len(), 4);
        let it = &outcome.iterations[0];
        assert_eq!(it.n_ai, 0);
        assert_eq!(it.n_human, articles.len());
        assert!(it.predictions.iter().all(|p| p.provenance == Provenance::Human));
        for r in &trace.rounds {
            assert!(r.realized_remainder_accuracy.unwrap() < 0.85);
        }
    }

    #[test]
    fn labeled_sets_are_nested_and_grow_by_batches()  {
        let articles = unlearnable_corpus(60);
        let cfg = ActiveLearningConfig {
            batch_fraction: 0.15,
            accuracy_threshold: 0.99,
            max_batches: 5,
            refresh_features: true,
        };
        let (trace, _outcome) = run_active_learning(
            &articles,
            scheme(),
            &FeaturePlan { input_set: InputSet::BiblioOnly, k_total: 40 },
            &forest_spec(),
            &cfg,
            8,
        )
        .unwrap();
        assert!(trace.rounds.len() <= cfg.max_batches);
        let mut seen: Vec<String> = Vec::new();
        let mut last_size = 0usize;
        for r in &trace.rounds {
            assert!(r.labeled_size > last_size, "labeled sizes must strictly increase");
            assert_eq!(r.labeled_size, last_size + r.selected_ids.len());
            for id in &r.selected_ids {
                assert!(!seen.contains(id), "article {id} selected twice");
                seen.push(id.clone());
            }
            last_size = r.labeled_size;
        }
        assert_eq!(trace.batch_size, 9);
    }

    #[test]
    fn frozen_vocabulary_variant_still_runs_to_a_verdict() {
        let articles = separable_corpus(15);
        let cfg = ActiveLearningConfig {
            batch_fraction: 0.25,
            accuracy_threshold: 0.85,
            max_batches: 3,
            refresh_features: false,
        };
        let (trace, outcome) = run_active_learning(
            &articles,
            scheme(),
            &FeaturePlan { input_set: InputSet::WithText, k_total: 40 },
            &forest_spec(),
            &cfg,
            5,
        )
        .unwrap();
        assert!(!trace.rounds.is_empty());
        let it = &outcome.iterations[0];
        assert_eq!(it.n_human + it.n_ai, articles.len());
    }

    #[test]
    fn reruns_are_identical() {
        let articles = separable_corpus(10);
        let cfg = ActiveLearningConfig {
            batch_fraction: 0.3,
            accuracy_threshold: 0.9,
            max_batches: 3,
            refresh_features: true,
        };
        let run = || {
            let (trace, outcome) = run_active_learning(
                &articles,
                scheme(),
                &FeaturePlan { input_set: InputSet::WithText, k_total: 40 },
                &forest_spec(),
                &cfg,
                42,
            )
            .unwrap();
            serde_json::to_string(&(trace, outcome)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn estimated_accuracy_is_recorded_alongside_realized() {
        let articles = separable_corpus(10);
        let cfg = ActiveLearningConfig {
            batch_fraction: 0.2,
            accuracy_threshold: 0.99,
            max_batches: 2,
            refresh_features: true,
        };
        let (trace, _outcome) = run_active_learning(
            &articles,
            scheme(),
            &FeaturePlan { input_set: InputSet::WithText, k_total: 40 },
            &forest_spec(),
            &cfg,
            9,
        )
        .unwrap();
        for r in &trace.rounds {
            if r.realized_remainder_accuracy.is_some() {
                let est = r.estimated_remainder_accuracy.unwrap();
                assert!((0.0..=1.0).contains(&est));
            }
        }
    }
}
