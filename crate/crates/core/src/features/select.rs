//! Chi-square association scoring and top-k term selection.
//!
//! Terms are binary per-article presence flags. Each candidate is scored by
//! the Pearson chi-square statistic of its 2×C presence-by-class table
//! (no continuity correction, zero-expected cells skipped), and the top
//! `k_total − n_biblio` candidates survive. Journal names compete in the
//! same pool as n-grams. All ties break lexicographically so the selected
//! vocabulary is a pure function of the training rows.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::text::{Term, TermKind};

/// Pearson chi-square of a 2×C table given the presence counts per class
/// and the class totals. Cells with zero expectation contribute nothing.
pub fn chi2_from_counts(present: &[u64], class_totals: &[u64]) -> f64 {
    assert_eq!(present.len(), class_totals.len());
    let n: u64 = class_totals.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let present_total: u64 = present.iter().sum();
    let row_totals = [present_total, n - present_total];
    let mut chi2 = 0.0;
    for (c, &col_total) in class_totals.iter().enumerate() {
        let observed = [present[c], col_total - present[c]];
        for (r, &row_total) in row_totals.iter().enumerate() {
            let expected = row_total as f64 * col_total as f64 / n as f64;
            if expected > 0.0 {
                let d = observed[r] as f64 - expected;
                chi2 += d * d / expected;
            }
        }
    }
    chi2
}

/// Chi-square statistic for one term's presence flags against class labels.
/// Requires at least two distinct classes.
pub fn chi_square(presence: &[bool], labels: &[u8]) -> Result<f64> {
    assert_eq!(presence.len(), labels.len());
    let classes: Vec<u8> = {
        let set: BTreeSet<u8> = labels.iter().copied().collect();
        set.into_iter().collect()
    };
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let mut present = vec![0u64; classes.len()];
    let mut totals = vec![0u64; classes.len()];
    for (i, &label) in labels.iter().enumerate() {
        let c = classes.binary_search(&label).expect("label is a class");
        totals[c] += 1;
        if presence[i] {
            present[c] += 1;
        }
    }
    Ok(chi2_from_counts(&present, &totals))
}

/// One selected feature: what it is, how strongly it associates with the
/// labels, and which class it leans toward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub kind: TermKind,
    pub token: String,
    pub chi2: f64,
    /// Class whose observed/expected presence ratio is maximal; ties go to
    /// the lower class.
    pub direction: u8,
}

/// An ordered feature vocabulary: descending chi-square, ties by token then
/// kind. `shortfall` flags that fewer candidates existed than were asked for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entries: Vec<VocabEntry>,
    pub shortfall: bool,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> Vec<Term> {
        self.entries.iter().map(|e| (e.kind, e.token.clone())).collect()
    }
}

/// Scores every candidate term appearing in the given per-article term sets.
fn score_terms(term_sets: &[BTreeSet<Term>], labels: &[u8]) -> Result<Vec<VocabEntry>> {
    assert_eq!(term_sets.len(), labels.len());
    let classes: Vec<u8> = {
        let set: BTreeSet<u8> = labels.iter().copied().collect();
        set.into_iter().collect()
    };
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let mut totals = vec![0u64; classes.len()];
    let mut counts: BTreeMap<&Term, Vec<u64>> = BTreeMap::new();
    for (i, terms) in term_sets.iter().enumerate() {
        let c = classes.binary_search(&labels[i]).expect("label is a class");
        totals[c] += 1;
        for term in terms {
            counts.entry(term).or_insert_with(|| vec![0; classes.len()])[c] += 1;
        }
    }
    let mut entries: Vec<VocabEntry> = counts
        .into_iter()
        .map(|(term, present)| {
            let chi2 = chi2_from_counts(&present, &totals);
            let mut direction = classes[0];
            let mut best_rate = -1.0;
            for (c, &class) in classes.iter().enumerate() {
                let rate = present[c] as f64 / totals[c] as f64;
                if rate > best_rate {
                    best_rate = rate;
                    direction = class;
                }
            }
            VocabEntry { kind: term.0, token: term.1.clone(), chi2, direction }
        })
        .collect();
    entries.sort_by(|a, b| {
        b.chi2
            .total_cmp(&a.chi2)
            .then_with(|| a.token.cmp(&b.token))
            .then_with(|| a.kind.cmp(&b.kind))
    });
    Ok(entries)
}

/// Selects the top `k_total − n_biblio` terms by chi-square from the
/// training articles' term sets. Journal-name terms compete alongside
/// n-grams. Fewer candidates than requested is not an error: everything is
/// returned and `shortfall` is set.
pub fn select_features(
    term_sets: &[BTreeSet<Term>],
    labels: &[u8],
    k_total: usize,
    n_biblio: usize,
) -> Result<Vocabulary> {
    if k_total <= n_biblio {
        return Err(Error::InvalidSpec(format!(
            "k_total ({k_total}) must exceed the dense column count ({n_biblio})"
        )));
    }
    let mut entries = score_terms(term_sets, labels)?;
    let k_text = k_total - n_biblio;
    let shortfall = entries.len() < k_text;
    entries.truncate(k_text);
    Ok(Vocabulary { entries, shortfall })
}

/// Per-class top terms: for each class, the `top_n` highest-chi-square
/// terms whose presence leans toward that class.
pub fn term_association_report(
    term_sets: &[BTreeSet<Term>],
    labels: &[u8],
    top_n: usize,
) -> Result<BTreeMap<u8, Vec<VocabEntry>>> {
    let entries = score_terms(term_sets, labels)?;
    let mut by_class: BTreeMap<u8, Vec<VocabEntry>> =
        labels.iter().map(|&l| (l, Vec::new())).collect();
    for entry in entries {
        if let Some(bucket) = by_class.get_mut(&entry.direction) {
            if bucket.len() < top_n {
                bucket.push(entry);
            }
        }
    }
    Ok(by_class)
}

/// Writes a vocabulary as CSV: `rank,kind,token,chi2,direction`.
pub fn vocabulary_to_csv<W: Write>(vocab: &Vocabulary, writer: &mut W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(["rank", "kind", "token", "chi2", "direction"])?;
    for (i, e) in vocab.entries.iter().enumerate() {
        csv.write_record([
            (i + 1).to_string(),
            e.kind.to_string(),
            e.token.clone(),
            e.chi2.to_string(),
            e.direction.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set_of(tokens: &[&str]) -> BTreeSet<Term> {
        tokens.iter().map(|t| (TermKind::Unigram, (*t).to_owned())).collect()
    }

    #[test]
    fn perfectly_separating_term_scores_eight() {
        // 4 class-A docs all with the term, 4 class-B docs without:
        // every cell's (O−E)²/E is 2, totalling 8.
        let presence = [true, true, true, true, false, false, false, false];
        let labels = [3u8, 3, 3, 3, 4, 4, 4, 4];
        assert!((chi_square(&presence, &labels).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_presence_scores_zero() {
        let presence = [true, false, true, false];
        let labels = [3u8, 3, 4, 4];
        assert_eq!(chi_square(&presence, &labels).unwrap(), 0.0);
    }

    #[test]
    fn absent_term_scores_zero() {
        let presence = [false; 6];
        let labels = [2u8, 2, 3, 3, 4, 4];
        assert_eq!(chi_square(&presence, &labels).unwrap(), 0.0);
        assert_eq!(chi2_from_counts(&[0, 0], &[4, 4]), 0.0);
    }

    #[test]
    fn single_class_is_an_error() {
        let err = chi_square(&[true, false], &[3, 3]).unwrap_err();
        assert!(matches!(err, Error::SingleClass));
    }

    /// Brute-force contingency computation over the explicit 2×C table,
    /// written independently of `chi2_from_counts`.
    pub(crate) fn brute_force_chi2(presence: &[bool], labels: &[u8]) -> f64 {
        let classes: BTreeSet<u8> = labels.iter().copied().collect();
        let n = labels.len() as f64;
        let mut chi2 = 0.0;
        for &class in &classes {
            for flag in [true, false] {
                let observed = labels
                    .iter()
                    .zip(presence)
                    .filter(|&(&l, &p)| l == class && p == flag)
                    .count() as f64;
                let row = presence.iter().filter(|&&p| p == flag).count() as f64;
                let col = labels.iter().filter(|&&l| l == class).count() as f64;
                let expected = row * col / n;
                if expected > 0.0 {
                    chi2 += (observed - expected) * (observed - expected) / expected;
                }
            }
        }
        chi2
    }

    #[test]
    fn matches_brute_force_on_random_tables() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let n = rng.random_range(4..50);
            let labels: Vec<u8> = (0..n).map(|_| [2u8, 3, 4][rng.random_range(0..3)]).collect();
            if labels.iter().collect::<BTreeSet<_>>().len() < 2 {
                continue;
            }
            let presence: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.4).collect();
            let fast = chi_square(&presence, &labels).unwrap();
            let slow = brute_force_chi2(&presence, &labels);
            assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
            assert!(fast >= 0.0);
        }
    }

    #[test]
    fn planted_tokens_occupy_top_ranks() {
        // "alpha" marks class 3, "beta" marks class 4; "the" is everywhere.
        let term_sets = vec![
            set_of(&["alpha", "the"]),
            set_of(&["alpha", "the"]),
            set_of(&["alpha", "the"]),
            set_of(&["beta", "the"]),
            set_of(&["beta", "the"]),
            set_of(&["beta", "the"]),
        ];
        let labels = [3u8, 3, 3, 4, 4, 4];
        let vocab = select_features(&term_sets, &labels, 12, 10).unwrap();
        assert_eq!(vocab.len(), 2);
        let tokens: Vec<&str> = vocab.entries.iter().map(|e| e.token.as_str()).collect();
        assert_eq!(tokens, ["alpha", "beta"]);
        assert_eq!(vocab.entries[0].direction, 3);
        assert_eq!(vocab.entries[1].direction, 4);
        assert!(!vocab.shortfall);
    }

    #[test]
    fn ties_break_lexicographically() {
        let term_sets = vec![set_of(&["zeta", "apex"]), set_of(&[])];
        let labels = [3u8, 4];
        let vocab = select_features(&term_sets, &labels, 11, 10).unwrap();
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.entries[0].token, "apex");
    }

    #[test]
    fn shortfall_is_flagged() {
        let term_sets = vec![set_of(&["only"]), set_of(&[])];
        let labels = [3u8, 4];
        let vocab = select_features(&term_sets, &labels, 1000, 10).unwrap();
        assert_eq!(vocab.len(), 1);
        assert!(vocab.shortfall);
    }

    #[test]
    fn k_total_must_exceed_dense_count() {
        assert!(select_features(&[], &[], 10, 10).is_err());
    }

    #[test]
    fn journal_names_compete_in_the_same_pool() {
        let mut a = set_of(&["word"]);
        a.insert((TermKind::JournalName, "great journal".into()));
        let mut b = set_of(&["word"]);
        b.insert((TermKind::JournalName, "other journal".into()));
        let term_sets = vec![a.clone(), a, b];
        let labels = [4u8, 4, 3];
        let vocab = select_features(&term_sets, &labels, 12, 10).unwrap();
        assert!(vocab
            .entries
            .iter()
            .any(|e| e.kind == TermKind::JournalName && e.token == "great journal"));
    }

    #[test]
    fn direction_ties_go_to_the_lower_class() {
        // Present in every document of both classes: rates tie at 1.
        let term_sets = vec![set_of(&["tie"]), set_of(&["tie"])];
        let labels = [3u8, 4];
        let report = term_association_report(&term_sets, &labels, 5).unwrap();
        assert_eq!(report[&3][0].token, "tie");
        assert!(report[&4].is_empty());
    }

    #[test]
    fn selection_ignores_row_order() {
        let term_sets = vec![
            set_of(&["alpha"]),
            set_of(&["beta"]),
            set_of(&["alpha", "gamma"]),
            set_of(&["beta"]),
        ];
        let labels = [3u8, 4, 3, 4];
        let forward = select_features(&term_sets, &labels, 13, 10).unwrap();
        let perm = [2usize, 0, 3, 1];
        let shuffled_sets: Vec<_> = perm.iter().map(|&i| term_sets[i].clone()).collect();
        let shuffled_labels: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
        let backward = select_features(&shuffled_sets, &shuffled_labels, 13, 10).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn style_terms_skewed_to_the_top_class_rank_high() {
        // Mimic a corpus where "we" appears in most top-class articles but
        // under a third of the rest.
        let mut term_sets = Vec::new();
        let mut labels = Vec::new();
        for i in 0..50 {
            let mut set = set_of(&["study", "results"]);
            if i % 10 < 8 {
                set.insert((TermKind::Unigram, "we".into()));
            }
            term_sets.push(set);
            labels.push(4u8);
        }
        for i in 0..50 {
            let mut set = set_of(&["study", "results"]);
            if i % 10 < 3 {
                set.insert((TermKind::Unigram, "we".into()));
            }
            term_sets.push(set);
            labels.push(3u8);
        }
        let report = term_association_report(&term_sets, &labels, 3).unwrap();
        assert_eq!(report[&4][0].token, "we");
        assert!(report[&4][0].chi2 > 20.0);
    }

    #[test]
    fn report_respects_top_n_zero() {
        let term_sets = vec![set_of(&["a"]), set_of(&["b"])];
        let labels = [3u8, 4];
        let report = term_association_report(&term_sets, &labels, 0).unwrap();
        assert!(report.values().all(Vec::is_empty));
    }

    #[test]
    fn vocabulary_csv_shape() {
        let vocab = Vocabulary {
            entries: vec![VocabEntry {
                kind: TermKind::Bigram,
                token: "machine learning".into(),
                chi2: 7.5,
                direction: 4,
            }],
            shortfall: false,
        };
        let mut out = Vec::new();
        vocabulary_to_csv(&vocab, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "rank,kind,token,chi2,direction\n1,bigram,machine learning,7.5,4\n");
    }
}
