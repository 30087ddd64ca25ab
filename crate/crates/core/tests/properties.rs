//! Cross-module properties checked on randomized inputs.

use proptest::prelude::*;

use scorecast::corpus::{
    apply_inclusion, clean_text, dedup_within_uoa, ArticleRecord, InclusionPolicy,
};
use scorecast::evaluation::{blend_overall_accuracy, research_power};
use scorecast::features::{
    build_matrix_with_terms, compute_imputations, field_year_stats, nlcs, tokenize, FeatureStats,
    InputSet, TermKind,
};
use scorecast::learners::{fit_model, LearnerKind, ModelSpec};
use scorecast::strategies::{count_at_threshold, prob_accuracy_curve, RankedPrediction};

fn record(id: &str) -> ArticleRecord {
    ArticleRecord {
        id: id.to_owned(),
        doi_group: String::new(),
        uoa: 1,
        year: 2016,
        score: Some(3),
        title: "a study of things".to_owned(),
        abstract_text: "We study things. Things are studied carefully here.".to_owned(),
        keywords: vec!["things".to_owned()],
        journal: "journal of things".to_owned(),
        field_id: "f1".to_owned(),
        citations: 5,
        n_authors: 3,
        n_institutions: 1,
        n_countries: 1,
        first_author_pubs: 10,
        first_author_mnlcs: 1.0,
        max_author_mnlcs: 1.2,
        pages: Some(10),
        institution: "inst-a".to_owned(),
        ecr: Some(false),
        gender_label: None,
        interdisciplinary: Some(false),
    }
}

proptest! {
    #[test]
    fn clean_text_is_idempotent(raw in "\\PC{0,200}") {
        let once = clean_text(&raw);
        prop_assert_eq!(clean_text(&once), once);
    }

    #[test]
    fn inclusion_drops_partition_the_input(
        years in proptest::collection::vec(2010i32..2022, 1..40),
        scores in proptest::collection::vec(0u8..=4, 1..40),
    ) {
        let n = years.len().min(scores.len());
        let records: Vec<ArticleRecord> = (0..n)
            .map(|i| {
                let mut a = record(&format!("r{i}"));
                a.year = years[i];
                a.score = Some(scores[i]);
                a
            })
            .collect();
        let policy = InclusionPolicy::default();
        let (kept, drops) = apply_inclusion(&records, &policy);
        prop_assert_eq!(kept.len() + drops.total(), records.len());
    }

    #[test]
    fn dedup_is_idempotent(
        group_picks in proptest::collection::vec(0usize..5, 2..30),
        scores in proptest::collection::vec(1u8..=4, 2..30),
        seed in 0u64..1000,
    ) {
        let n = group_picks.len().min(scores.len());
        let records: Vec<ArticleRecord> = (0..n)
            .map(|i| {
                let mut a = record(&format!("r{i}"));
                // Group 0 stands for "no duplicates known".
                a.doi_group = if group_picks[i] == 0 {
                    String::new()
                } else {
                    format!("g{}", group_picks[i])
                };
                a.score = Some(scores[i]);
                a
            })
            .collect();
        let once = dedup_within_uoa(&records, seed);
        let twice = dedup_within_uoa(&once, seed);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn bigrams_come_with_their_unigrams(
        words in proptest::collection::vec("[a-z]{1,6}", 1..12),
    ) {
        let title = words.join(" ");
        let terms = tokenize(&title, "", &[]);
        for term in &terms {
            if term.0 == TermKind::Bigram {
                for w in term.1.split(' ') {
                    prop_assert!(
                        terms.contains(&(TermKind::Unigram, w.to_owned())),
                        "bigram {:?} lacks unigram {w}",
                        term.1
                    );
                }
            }
        }
    }

    #[test]
    fn curve_counts_shrink_as_thresholds_rise(
        flags in proptest::collection::vec(any::<bool>(), 0..30),
        confs in proptest::collection::vec(0.0f64..1.0, 0..30),
    ) {
        let n = flags.len().min(confs.len());
        let items: Vec<RankedPrediction> = (0..n)
            .map(|i| RankedPrediction {
                article_id: format!("a{i:02}"),
                confidence: confs[i],
                correct: flags[i],
            })
            .collect();
        let curve = prob_accuracy_curve(&items);
        let mut last = usize::MAX;
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let c = count_at_threshold(&curve, t);
            prop_assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn power_is_bounded_and_monotone(
        scores in proptest::collection::vec(1u8..=4, 1..50),
        bump in 0usize..50,
    ) {
        let p = research_power(&scores).unwrap();
        prop_assert!((0.0..=100.0).contains(&p));
        let i = bump % scores.len();
        let mut upgraded = scores.clone();
        upgraded[i] = 4;
        prop_assert!(research_power(&upgraded).unwrap() >= p - 1e-12);
    }

    #[test]
    fn blend_is_monotone_in_every_argument(
        h in 0.0f64..=1.0,
        a in 0.0f64..=1.0,
        e in 0.0f64..=1.0,
        delta in 0.01f64..0.5,
    ) {
        let (elig, all) = blend_overall_accuracy(h, a, e);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&elig));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&all));
        let bump = |v: f64| (v + delta).min(1.0);
        let (e1, _) = blend_overall_accuracy(bump(h), a, e);
        prop_assert!(e1 >= elig - 1e-12);
        let (e2, _) = blend_overall_accuracy(h, bump(a), e);
        prop_assert!(e2 >= elig - 1e-12);
        let (full, full_all) = blend_overall_accuracy(1.0, a, e);
        prop_assert_eq!(full, 1.0);
        prop_assert_eq!(full_all, 1.0);
    }

    #[test]
    fn citation_scaling_leaves_normalized_impact_unchanged(
        citations in proptest::collection::vec(0u64..500, 3..20),
        k in 2u32..4,
    ) {
        // Raising every ln(1+c) by the same factor cancels out of the
        // cell-normalized ratio.
        let make = |cs: &[u64]| -> Vec<ArticleRecord> {
            cs.iter()
                .enumerate()
                .map(|(i, &c)| {
                    let mut a = record(&format!("r{i}"));
                    a.citations = c;
                    a
                })
                .collect()
        };
        let orig = make(&citations);
        let scaled_c: Vec<u64> = citations
            .iter()
            .map(|&c| ((1.0 + c as f64).powi(k as i32) - 1.0).round() as u64)
            .collect();
        let scaled = make(&scaled_c);
        let stats_a = field_year_stats(&orig).unwrap();
        let stats_b = field_year_stats(&scaled).unwrap();
        // Exact power-of-(1+c) scaling only survives integer rounding when
        // the scaled citation count is exact; check those rows.
        for (i, (&c, &sc)) in citations.iter().zip(&scaled_c).enumerate() {
            let exact = ((1.0 + c as f64).powi(k as i32) - 1.0).fract() == 0.0;
            if !exact {
                continue;
            }
            let a = nlcs(c, "f1", 2016, &stats_a).unwrap();
            let b = nlcs(sc, "f1", 2016, &stats_b).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "row {i}: {a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn predicted_probabilities_stay_on_the_simplex(
        citations in proptest::collection::vec(0u64..300, 10..16),
        label_picks in proptest::collection::vec(0usize..3, 10..16),
        seed in 0u64..500,
    ) {
        let n = citations.len().min(label_picks.len());
        let labels: Vec<u8> = (0..n).map(|i| [2u8, 3, 4][label_picks[i]]).collect();
        // Flat learners need two classes; the ordinal wrapper additionally
        // needs both extreme classes so every cut has two sides.
        prop_assume!(labels.contains(&2) && labels.contains(&4));

        let articles: Vec<ArticleRecord> = (0..n)
            .map(|i| {
                let mut a = record(&format!("r{i}"));
                a.citations = citations[i];
                a.pages = Some(4 + (i as u32 % 9));
                a
            })
            .collect();
        let stats = FeatureStats::fit(&articles).unwrap();
        let imputations = compute_imputations(&articles);
        let matrix = build_matrix_with_terms(
            &articles,
            &[],
            InputSet::BiblioOnly,
            &stats,
            None,
            &imputations,
            false,
        )
        .unwrap();

        for (kind, ordinal) in [
            (LearnerKind::RandomForest, false),
            (LearnerKind::GradBoost, false),
            (LearnerKind::XGradBoost, false),
            (LearnerKind::Modal, false),
            (LearnerKind::RandomForest, true),
            (LearnerKind::GradBoost, true),
        ] {
            let mut spec = ModelSpec::new(kind);
            spec.ordinal = ordinal;
            spec.n_trees = 5;
            spec.n_rounds = 5;
            let model = fit_model(&spec, &matrix, &labels, &[2, 3, 4], seed).unwrap();
            for p in model.predict_proba(&matrix).unwrap() {
                let sum: f64 = p.probs.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9, "{kind:?} ordinal={ordinal}: sum {sum}");
                for &v in &p.probs {
                    prop_assert!(v >= 0.0, "{kind:?} ordinal={ordinal}: negative prob {v}");
                }
            }
        }
    }
}
