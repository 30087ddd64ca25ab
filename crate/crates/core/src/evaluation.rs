//! Outcome metrics: prediction accuracy against held-out labels, the
//! funding-weighted "research power" score, institutional power and GPA
//! shifts under AI-substituted scores, subgroup fairness deltas,
//! correlation analyses, half-sample power estimation, and overall-accuracy
//! blending of mixed human/machine pipelines.
//!
//! Everything here is a pure function over immutable slices; per-article
//! inputs are always aligned (same index = same article).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{fnv1a64, mix_seed};

/// Funding weight of a quality score: 100 for 4*, 25 for 3*, 0 below.
pub fn power_weight(score: u8) -> f64 {
    match score {
        4 => 100.0,
        3 => 25.0,
        _ => 0.0,
    }
}

/// Mean funding weight over a nonempty score list; lies in [0, 100].
pub fn research_power(scores: &[u8]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("research_power"));
    }
    Ok(scores.iter().map(|&s| power_weight(s)).sum::<f64>() / scores.len() as f64)
}

/// Raw agreement fraction and its margin over the modal baseline (the
/// frequency of the most common truth).
pub fn accuracy(preds: &[u8], truths: &[u8]) -> Result<(f64, f64)> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("accuracy"));
    }
    assert_eq!(preds.len(), truths.len());
    let n = preds.len() as f64;
    let raw = preds.iter().zip(truths).filter(|(p, t)| p == t).count() as f64 / n;
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for &t in truths {
        *counts.entry(t).or_insert(0) += 1;
    }
    let modal = counts.values().max().copied().unwrap_or(0) as f64 / n;
    Ok((raw, raw - modal))
}

/// Sample Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return Err(Error::EmptyInput("pearson"));
    }
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}

/// One iteration's corpus after substitution: per-article scores where
/// AI-predicted articles carry the predicted score and the rest keep the
/// human score, plus the AI-predicted share of all articles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlendedIteration {
    pub scores: Vec<u8>,
    pub predicted_fraction: f64,
}

/// Power shift of one institution under score substitution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftEntry {
    pub institution: String,
    pub n_articles: usize,
    pub human_power: f64,
    pub blended_power_mean: f64,
    /// Gain in power points: blended − human, averaged over iterations.
    pub gain_mean: f64,
    pub gain_min: f64,
    pub gain_max: f64,
    /// Gain scaled by the iteration's AI-predicted fraction.
    pub overall_gain_mean: f64,
    pub overall_gain_min: f64,
    pub overall_gain_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftReport {
    /// Sorted by institution name.
    pub entries: Vec<ShiftEntry>,
    /// Universe institutions that own no articles, skipped with a flag
    /// rather than reported as zeros.
    pub excluded: Vec<String>,
    /// Corpus-level power delta, averaged over iterations; equals the
    /// article-count-weighted mean of the per-institution gains.
    pub corpus_gain_mean: f64,
    pub predicted_fraction_mean: f64,
}

/// Per-institution research-power gains when AI-substituted scores replace
/// human ones. `universe` may add institutions that should be acknowledged
/// even if the corpus has no articles for them.
pub fn institutional_shift(
    institutions: &[&str],
    human: &[u8],
    iterations: &[BlendedIteration],
    universe: Option<&[String]>,
) -> Result<ShiftReport> {
    assert_eq!(institutions.len(), human.len());
    if institutions.is_empty() {
        return Err(Error::EmptyInput("institutional_shift"));
    }
    if iterations.is_empty() {
        return Err(Error::EmptyInput("institutional_shift iterations"));
    }
    let mut rows_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in institutions.iter().enumerate() {
        rows_of.entry(inst).or_default().push(i);
    }
    let mut excluded = Vec::new();
    if let Some(universe) = universe {
        for inst in universe {
            if !rows_of.contains_key(inst.as_str()) {
                excluded.push(inst.clone());
            }
        }
        excluded.sort();
        excluded.dedup();
    }

    let power_of = |rows: &[usize], scores: &[u8]| -> f64 {
        rows.iter().map(|&r| power_weight(scores[r])).sum::<f64>() / rows.len() as f64
    };

    let mut entries = Vec::with_capacity(rows_of.len());
    for (inst, rows) in &rows_of {
        let human_power = power_of(rows, human);
        let mut gains = Vec::with_capacity(iterations.len());
        let mut overalls = Vec::with_capacity(iterations.len());
        let mut blended_sum = 0.0;
        for it in iterations {
            assert_eq!(it.scores.len(), human.len());
            let blended = power_of(rows, &it.scores);
            blended_sum += blended;
            let gain = blended - human_power;
            gains.push(gain);
            overalls.push(gain * it.predicted_fraction);
        }
        let k = iterations.len() as f64;
        entries.push(ShiftEntry {
            institution: (*inst).to_owned(),
            n_articles: rows.len(),
            human_power,
            blended_power_mean: blended_sum / k,
            gain_mean: gains.iter().sum::<f64>() / k,
            gain_min: gains.iter().copied().fold(f64::INFINITY, f64::min),
            gain_max: gains.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            overall_gain_mean: overalls.iter().sum::<f64>() / k,
            overall_gain_min: overalls.iter().copied().fold(f64::INFINITY, f64::min),
            overall_gain_max: overalls.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }

    let corpus_human = research_power(human)?;
    let corpus_gain_mean = iterations
        .iter()
        .map(|it| research_power(&it.scores).map(|p| p - corpus_human))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        / iterations.len() as f64;
    let predicted_fraction_mean =
        iterations.iter().map(|it| it.predicted_fraction).sum::<f64>() / iterations.len() as f64;

    Ok(ShiftReport { entries, excluded, corpus_gain_mean, predicted_fraction_mean })
}

/// Whether institutional correlations compare mean power or summed power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    Average,
    Total,
}

/// Pearson correlation between per-institution human and predicted power,
/// either averaged per article or summed over the submission.
pub fn institution_correlations(
    institutions: &[&str],
    human: &[u8],
    predicted: &[u8],
    mode: CorrelationMode,
) -> Result<Option<f64>> {
    assert_eq!(institutions.len(), human.len());
    assert_eq!(institutions.len(), predicted.len());
    let mut rows_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in institutions.iter().enumerate() {
        rows_of.entry(inst).or_default().push(i);
    }
    if rows_of.len() < 2 {
        return Err(Error::EmptyInput("institution_correlations"));
    }
    let agg = |rows: &[usize], scores: &[u8]| -> f64 {
        let sum: f64 = rows.iter().map(|&r| power_weight(scores[r])).sum();
        match mode {
            CorrelationMode::Average => sum / rows.len() as f64,
            CorrelationMode::Total => sum,
        }
    };
    let xs: Vec<f64> = rows_of.values().map(|rows| agg(rows, human)).collect();
    let ys: Vec<f64> = rows_of.values().map(|rows| agg(rows, predicted)).collect();
    pearson(&xs, &ys)
}

/// Rank movement of one institution when GPAs are recomputed with
/// AI-substituted scores.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankShiftEntry {
    pub institution: String,
    pub n_articles: usize,
    pub human_gpa: f64,
    pub gpa_mean: f64,
    pub human_rank: usize,
    /// Rank delta = human rank − substituted rank (positive = moved up).
    pub rank_delta_min: i64,
    pub rank_delta_mean: f64,
    pub rank_delta_max: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankShiftReport {
    pub entries: Vec<RankShiftEntry>,
}

/// GPA maps every score below 2 up to 2 before averaging, aligning human
/// scales with predictions that never emit the bottom grade.
fn gpa_score(score: u8) -> f64 {
    f64::from(score.max(2))
}

fn gpa_of(rows: &[usize], scores: &[u8]) -> f64 {
    rows.iter().map(|&r| gpa_score(scores[r])).sum::<f64>() / rows.len() as f64
}

/// 1-based ranks by GPA descending, ties by institution name ascending.
fn ranks(names: &[&str], gpas: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| gpas[b].total_cmp(&gpas[a]).then_with(|| names[a].cmp(names[b])));
    let mut rank = vec![0usize; names.len()];
    for (pos, &idx) in order.iter().enumerate() {
        rank[idx] = pos + 1;
    }
    rank
}

/// Institutional GPA and league-table rank movement per substitution
/// iteration.
pub fn gpa_rank_shift(
    institutions: &[&str],
    human: &[u8],
    iterations: &[Vec<u8>],
) -> Result<RankShiftReport> {
    assert_eq!(institutions.len(), human.len());
    if institutions.is_empty() {
        return Err(Error::EmptyInput("gpa_rank_shift"));
    }
    if iterations.is_empty() {
        return Err(Error::EmptyInput("gpa_rank_shift iterations"));
    }
    let mut rows_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in institutions.iter().enumerate() {
        rows_of.entry(inst).or_default().push(i);
    }
    let names: Vec<&str> = rows_of.keys().copied().collect();
    let row_sets: Vec<&Vec<usize>> = rows_of.values().collect();

    let human_gpas: Vec<f64> = row_sets.iter().map(|rows| gpa_of(rows, human)).collect();
    let human_ranks = ranks(&names, &human_gpas);

    let mut gpa_sums = vec![0.0; names.len()];
    let mut delta_min = vec![i64::MAX; names.len()];
    let mut delta_max = vec![i64::MIN; names.len()];
    let mut delta_sum = vec![0.0; names.len()];
    for scores in iterations {
        assert_eq!(scores.len(), human.len());
        let gpas: Vec<f64> = row_sets.iter().map(|rows| gpa_of(rows, scores)).collect();
        let iter_ranks = ranks(&names, &gpas);
        for i in 0..names.len() {
            gpa_sums[i] += gpas[i];
            let delta = human_ranks[i] as i64 - iter_ranks[i] as i64;
            delta_min[i] = delta_min[i].min(delta);
            delta_max[i] = delta_max[i].max(delta);
            delta_sum[i] += delta as f64;
        }
    }

    let k = iterations.len() as f64;
    let entries = (0..names.len())
        .map(|i| RankShiftEntry {
            institution: names[i].to_owned(),
            n_articles: row_sets[i].len(),
            human_gpa: human_gpas[i],
            gpa_mean: gpa_sums[i] / k,
            human_rank: human_ranks[i],
            rank_delta_min: delta_min[i],
            rank_delta_mean: delta_sum[i] / k,
            rank_delta_max: delta_max[i],
        })
        .collect();
    Ok(RankShiftReport { entries })
}

/// Mean gain of one article subgroup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupShift {
    pub label: String,
    pub n_articles: usize,
    pub gain_mean: f64,
    pub gain_min: f64,
    pub gain_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupShiftReport {
    pub groups: Vec<GroupShift>,
    /// True when no article carried a group label at all.
    pub no_labeled_articles: bool,
}

/// Mean per-article funding-weight gain per subgroup; articles without a
/// label are excluded from every group.
pub fn subgroup_shift(
    group_labels: &[Option<String>],
    human: &[u8],
    iterations: &[Vec<u8>],
) -> Result<SubgroupShiftReport> {
    assert_eq!(group_labels.len(), human.len());
    if iterations.is_empty() {
        return Err(Error::EmptyInput("subgroup_shift iterations"));
    }
    let mut rows_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in group_labels.iter().enumerate() {
        if let Some(label) = label {
            rows_of.entry(label).or_default().push(i);
        }
    }
    let k = iterations.len() as f64;
    let groups = rows_of
        .iter()
        .map(|(label, rows)| {
            let mut gains = Vec::with_capacity(iterations.len());
            for scores in iterations {
                assert_eq!(scores.len(), human.len());
                let gain = rows
                    .iter()
                    .map(|&r| power_weight(scores[r]) - power_weight(human[r]))
                    .sum::<f64>()
                    / rows.len() as f64;
                gains.push(gain);
            }
            GroupShift {
                label: (*label).to_owned(),
                n_articles: rows.len(),
                gain_mean: gains.iter().sum::<f64>() / k,
                gain_min: gains.iter().copied().fold(f64::INFINITY, f64::min),
                gain_max: gains.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect::<Vec<_>>();
    Ok(SubgroupShiftReport { no_labeled_articles: groups.is_empty(), groups })
}

/// Correlations of per-institution gain against three covariates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeQualityCorrelations {
    pub vs_institution_size: Option<f64>,
    pub vs_submission_size: Option<f64>,
    pub vs_mean_power: Option<f64>,
}

/// Pearson correlations of institutional gain vs institution size,
/// submission size, and mean human power (all aligned per institution).
pub fn size_quality_correlations(
    gains: &[f64],
    institution_size: &[f64],
    submission_size: &[f64],
    mean_power: &[f64],
) -> Result<SizeQualityCorrelations> {
    assert_eq!(gains.len(), institution_size.len());
    assert_eq!(gains.len(), submission_size.len());
    assert_eq!(gains.len(), mean_power.len());
    Ok(SizeQualityCorrelations {
        vs_institution_size: pearson(gains, institution_size)?,
        vs_submission_size: pearson(gains, submission_size)?,
        vs_mean_power: pearson(gains, mean_power)?,
    })
}

/// Half-sample power estimate for one institution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfSampleEntry {
    pub institution: String,
    pub n_articles: usize,
    pub true_power: f64,
    pub estimate_mean: f64,
    pub estimate_min: f64,
    pub estimate_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfSampleReport {
    pub entries: Vec<HalfSampleEntry>,
    /// Institutions with fewer than two articles, which cannot be halved.
    pub excluded: Vec<String>,
}

/// Scores a random half of each institution's articles per iteration; the
/// half-sample's power estimates the full submission's. Per-institution
/// RNG streams make the result independent of institution order.
pub fn half_sample_doubling(
    institutions: &[&str],
    scores: &[u8],
    n_iterations: usize,
    seed: u64,
) -> Result<HalfSampleReport> {
    assert_eq!(institutions.len(), scores.len());
    if n_iterations == 0 {
        return Err(Error::EmptyInput("half_sample_doubling iterations"));
    }
    let mut rows_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in institutions.iter().enumerate() {
        rows_of.entry(inst).or_default().push(i);
    }
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    for (inst, rows) in &rows_of {
        if rows.len() < 2 {
            excluded.push((*inst).to_owned());
            continue;
        }
        let inst_scores: Vec<u8> = rows.iter().map(|&r| scores[r]).collect();
        let true_power = research_power(&inst_scores)?;
        let half = rows.len() / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, fnv1a64(inst.as_bytes())));
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut pool: Vec<u8> = inst_scores.clone();
        for _ in 0..n_iterations {
            pool.shuffle(&mut rng);
            let estimate = research_power(&pool[..half])?;
            sum += estimate;
            min = min.min(estimate);
            max = max.max(estimate);
        }
        entries.push(HalfSampleEntry {
            institution: (*inst).to_owned(),
            n_articles: rows.len(),
            true_power,
            estimate_mean: sum / n_iterations as f64,
            estimate_min: min,
            estimate_max: max,
        });
    }
    Ok(HalfSampleReport { entries, excluded })
}

/// Overall accuracy when a human-scored fraction `h` (assumed perfect) is
/// blended with machine predictions of accuracy `a` on the rest, and the
/// machine-eligible articles make up `eligible_fraction` of the whole:
/// eligible = h + (1−h)·a; all-articles = (1−e) + e·eligible.
pub fn blend_overall_accuracy(
    human_fraction: f64,
    ai_accuracy: f64,
    eligible_fraction: f64,
) -> (f64, f64) {
    for v in [human_fraction, ai_accuracy, eligible_fraction] {
        assert!((0.0..=1.0).contains(&v), "blend inputs must lie in [0,1]");
    }
    let eligible = human_fraction + (1.0 - human_fraction) * ai_accuracy;
    let all = (1.0 - eligible_fraction) + eligible_fraction * eligible;
    (eligible, all)
}
