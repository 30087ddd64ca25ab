//! Reviewer-reliability statistics computed from duplicate submissions and
//! from journals: score agreement between copies of the same article, and
//! the probability that two articles from one journal share a score.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::ArticleRecord;

/// Which duplicate pairs an agreement computation looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementScope {
    /// Pairs submitted to the same unit of assessment.
    WithinUoa,
    /// Pairs submitted to different units of assessment.
    BetweenUoa,
}

/// Score agreement over duplicate submissions.
///
/// All rates live in \[0, 1\]. `undefined` is set (and the rate fields left
/// empty) when the corpus has no qualifying pair in the requested scope.
#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub scope: AgreementScope,
    /// Duplicate groups contributing at least one in-scope pair.
    pub n_groups: usize,
    /// Unordered in-scope pairs with both scores in 1–4.
    pub n_pairs: usize,
    /// Fraction of pairs with equal scores.
    pub agreement: Option<f64>,
    /// Same fraction after merging scores 1 and 2 into one class.
    pub agreement_merged: Option<f64>,
    /// Within-uoa agreement per uoa (within scope only).
    pub per_uoa: BTreeMap<u8, f64>,
    /// Least-squares extrapolation of per-group-size mean agreement down to
    /// group size 1, clamped into \[0, 1\] (between scope only). Needs at
    /// least two distinct group sizes.
    pub extrapolated_single: Option<f64>,
    pub undefined: bool,
}

fn merged(score: u8) -> u8 {
    if score <= 2 {
        2
    } else {
        score
    }
}

/// Computes duplicate-score agreement. Run this before deduplication; only
/// submissions with scores in 1–4 form pairs.
pub fn agreement_stats(records: &[ArticleRecord], scope: AgreementScope) -> AgreementReport {
    // doi_group → indices of qualifying submissions.
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if r.doi_group.is_empty() {
            continue;
        }
        if matches!(r.score, Some(s) if (1..=4).contains(&s)) {
            groups.entry(r.doi_group.as_str()).or_default().push(i);
        }
    }

    let in_scope = |a: &ArticleRecord, b: &ArticleRecord| match scope {
        AgreementScope::WithinUoa => a.uoa == b.uoa,
        AgreementScope::BetweenUoa => a.uoa != b.uoa,
    };

    let mut n_groups = 0;
    let mut n_pairs = 0;
    let mut equal = 0usize;
    let mut equal_merged = 0usize;
    let mut per_uoa_counts: BTreeMap<u8, (usize, usize)> = BTreeMap::new();
    // group size → per-group agreement values (between-scope extrapolation).
    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();

    for members in groups.values() {
        let mut group_pairs = 0usize;
        let mut group_equal = 0usize;
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                let (a, b) = (&records[i], &records[j]);
                if !in_scope(a, b) {
                    continue;
                }
                let (sa, sb) = (a.score.unwrap(), b.score.unwrap());
                group_pairs += 1;
                if sa == sb {
                    group_equal += 1;
                }
                if merged(sa) == merged(sb) {
                    equal_merged += 1;
                }
                if scope == AgreementScope::WithinUoa {
                    let entry = per_uoa_counts.entry(a.uoa).or_default();
                    entry.0 += 1;
                    if sa == sb {
                        entry.1 += 1;
                    }
                }
            }
        }
        if group_pairs > 0 {
            n_groups += 1;
            n_pairs += group_pairs;
            equal += group_equal;
            if scope == AgreementScope::BetweenUoa {
                by_size
                    .entry(members.len())
                    .or_default()
                    .push(group_equal as f64 / group_pairs as f64);
            }
        }
    }

    let rate = |num: usize| {
        if n_pairs == 0 {
            None
        } else {
            Some(num as f64 / n_pairs as f64)
        }
    };

    let extrapolated_single = if scope == AgreementScope::BetweenUoa && by_size.len() >= 2 {
        let points: Vec<(f64, f64)> = by_size
            .iter()
            .map(|(size, vals)| {
                (
                    *size as f64,
                    vals.iter().sum::<f64>() / vals.len() as f64,
                )
            })
            .collect();
        let n = points.len() as f64;
        let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
        let var_x: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        let cov: f64 = points
            .iter()
            .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
            .sum();
        let slope = cov / var_x;
        let intercept = mean_y - slope * mean_x;
        Some((intercept + slope).clamp(0.0, 1.0))
    } else {
        None
    };

    AgreementReport {
        scope,
        n_groups,
        n_pairs,
        agreement: rate(equal),
        agreement_merged: rate(equal_merged),
        per_uoa: per_uoa_counts
            .into_iter()
            .map(|(uoa, (pairs, eq))| (uoa, eq as f64 / pairs as f64))
            .collect(),
        extrapolated_single,
        undefined: n_pairs == 0,
    }
}

/// Probability that two articles from the same journal share a score.
#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityReport {
    /// Pooled over every within-journal pair in the corpus, i.e. journals
    /// weighted by their pair counts.
    pub overall: Option<f64>,
    /// Same computation restricted to each uoa's articles.
    pub per_uoa: BTreeMap<u8, f64>,
    /// Journals contributing at least one pair.
    pub n_journals: usize,
    pub n_pairs: usize,
    pub undefined: bool,
}

/// Computes journal score homogeneity. Run after deduplication; articles
/// without a score in 1–4 are ignored.
pub fn journal_homogeneity(records: &[ArticleRecord]) -> HomogeneityReport {
    fn pooled(records: &[&ArticleRecord]) -> (usize, usize, usize) {
        let mut journals: BTreeMap<&str, Vec<u8>> = BTreeMap::new();
        for r in records {
            if let Some(s) = r.score {
                if (1..=4).contains(&s) {
                    journals.entry(r.journal.as_str()).or_default().push(s);
                }
            }
        }
        let mut pairs = 0;
        let mut equal = 0;
        let mut n_journals = 0;
        for scores in journals.values() {
            if scores.len() < 2 {
                continue;
            }
            n_journals += 1;
            for (k, &a) in scores.iter().enumerate() {
                for &b in &scores[k + 1..] {
                    pairs += 1;
                    if a == b {
                        equal += 1;
                    }
                }
            }
        }
        (n_journals, pairs, equal)
    }

    let all: Vec<&ArticleRecord> = records.iter().collect();
    let (n_journals, n_pairs, equal) = pooled(&all);

    let mut per_uoa = BTreeMap::new();
    let mut uoas: Vec<u8> = records.iter().map(|r| r.uoa).collect();
    uoas.sort_unstable();
    uoas.dedup();
    for uoa in uoas {
        let subset: Vec<&ArticleRecord> = records.iter().filter(|r| r.uoa == uoa).collect();
        let (_, pairs, eq) = pooled(&subset);
        if pairs > 0 {
            per_uoa.insert(uoa, eq as f64 / pairs as f64);
        }
    }

    HomogeneityReport {
        overall: (n_pairs > 0).then(|| equal as f64 / n_pairs as f64),
        per_uoa,
        n_journals,
        n_pairs,
        undefined: n_pairs == 0,
    }
}
