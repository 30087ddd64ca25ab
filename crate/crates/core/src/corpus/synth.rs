//! Synthetic corpus generation with planted, recoverable signal.
//!
//! Real labeled assessment data is confidential, so experiments and tests
//! run on generated corpora: each article gets a latent class drawn from a
//! per-uoa prior, and every observable (citations, planted vocabulary,
//! journal, institution, author track record) is sampled conditioned on
//! that class. Label noise then replaces the recorded score with a uniform
//! draw over all classes at the configured rate, which makes noise 1.0
//! produce labels statistically independent of every planted feature.
//!
//! Generation is a single sequential pass over one seeded generator, so a
//! given (spec, seed) pair always yields a byte-identical corpus.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleRecord, Gender, LabelMode, LabelScheme};
use crate::error::{Error, Result};

/// Article volume and class mix for one unit of assessment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UoaSpec {
    pub uoa: u8,
    pub n_articles: usize,
    /// Latent-class prior, aligned with the label mode's ordered classes.
    pub prior: Vec<f64>,
}

/// Tokens planted into the text of articles of one class.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedVocab {
    pub class: u8,
    pub tokens: Vec<String>,
    /// Per-token probability of appearing in a matching article's abstract.
    pub inclusion_prob: f64,
}

/// Lognormal citation model for one class: parameters of the underlying
/// normal distribution of ln(citations).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CitationModel {
    pub class: u8,
    pub ln_mean: f64,
    pub ln_sigma: f64,
}

/// One journal in the pool, biased toward a quality class.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JournalSpec {
    pub name: String,
    pub bias_class: u8,
    /// Share of this journal's sampling weight concentrated on its bias
    /// class; the remainder spreads evenly over the other classes.
    pub strength: f64,
}

/// Rates for the optional subgroup flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubgroupRates {
    pub ecr: f64,
    pub female: f64,
    pub male: f64,
    pub interdisciplinary: f64,
}

impl Default for SubgroupRates {
    fn default() -> Self {
        SubgroupRates {
            ecr: 0.25,
            female: 0.40,
            male: 0.45,
            interdisciplinary: 0.20,
        }
    }
}

/// Full description of a synthetic corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub label_mode: LabelMode,
    pub uoas: Vec<UoaSpec>,
    #[serde(default = "d_year_min")]
    pub year_min: i32,
    #[serde(default = "d_year_max")]
    pub year_max: i32,
    #[serde(default)]
    pub planted: Vec<PlantedVocab>,
    pub citation_models: Vec<CitationModel>,
    pub journals: Vec<JournalSpec>,
    /// Probability that an article's recorded label is replaced by a
    /// uniform draw over all classes.
    #[serde(default)]
    pub noise: f64,
    /// Probability that an article receives one duplicate submission.
    #[serde(default)]
    pub duplicate_rate: f64,
    /// Probability that a duplicate goes to a different uoa (when several
    /// uoas exist).
    #[serde(default = "d_dup_cross")]
    pub duplicate_cross_uoa: f64,
    /// Probability a same-uoa duplicate keeps the original's score.
    #[serde(default = "d_dup_same_within")]
    pub duplicate_same_score_within: f64,
    /// Probability a cross-uoa duplicate keeps the original's score.
    #[serde(default = "d_dup_same_between")]
    pub duplicate_same_score_between: f64,
    /// Per-year probability increment that a planted token is replaced by a
    /// year-specific variant, eroding old vocabulary over time.
    #[serde(default)]
    pub vocab_drift: f64,
    /// Number of institutions in the pool; low indices are both larger and
    /// tilted toward higher classes.
    #[serde(default = "d_institution_pool")]
    pub institution_pool: usize,
    /// Strength of the institution quality tilt, 0 = none.
    #[serde(default = "d_institution_tilt")]
    pub institution_tilt: f64,
    #[serde(default = "d_pages_missing")]
    pub pages_missing_rate: f64,
    #[serde(default)]
    pub subgroups: SubgroupRates,
    #[serde(default = "d_fields_per_uoa")]
    pub fields_per_uoa: usize,
    /// Target sentence count per abstract (the realised count varies ±2 and
    /// abstracts are padded to stay over typical inclusion thresholds).
    #[serde(default = "d_sentences")]
    pub sentences_per_abstract: usize,
}

fn d_year_min() -> i32 {
    2014
}
fn d_year_max() -> i32 {
    2018
}
fn d_dup_cross() -> f64 {
    0.5
}
fn d_dup_same_within() -> f64 {
    0.99
}
fn d_dup_same_between() -> f64 {
    0.6
}
fn d_institution_pool() -> usize {
    20
}
fn d_institution_tilt() -> f64 {
    0.5
}
fn d_pages_missing() -> f64 {
    0.1
}
fn d_fields_per_uoa() -> usize {
    2
}
fn d_sentences() -> usize {
    10
}

impl SyntheticSpec {
    pub fn scheme(&self) -> LabelScheme {
        LabelScheme::new(self.label_mode)
    }

    /// Checks every invariant, reporting the offending field by path.
    pub fn validate(&self) -> Result<()> {
        let bad = |path: String, what: &str| Err(Error::InvalidSpec(format!("{path}: {what}")));
        let classes = self.scheme().classes();
        if self.uoas.is_empty() {
            return bad("uoas".into(), "must list at least one uoa");
        }
        for (i, u) in self.uoas.iter().enumerate() {
            if !(1..=34).contains(&u.uoa) {
                return bad(format!("uoas[{i}].uoa"), "must be 1–34");
            }
            if u.n_articles == 0 {
                return bad(format!("uoas[{i}].n_articles"), "must be ≥ 1");
            }
            if u.prior.len() != classes.len() {
                return bad(
                    format!("uoas[{i}].prior"),
                    "length must match the label mode's class count",
                );
            }
            if u.prior.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return bad(format!("uoas[{i}].prior"), "entries must lie in [0,1]");
            }
            if (u.prior.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("uoas[{i}].prior"), "must sum to 1");
            }
        }
        for (i, p) in self.planted.iter().enumerate() {
            if !classes.contains(&p.class) {
                return bad(format!("planted[{i}].class"), "not a class of this label mode");
            }
            if !(0.0..=1.0).contains(&p.inclusion_prob) {
                return bad(format!("planted[{i}].inclusion_prob"), "must lie in [0,1]");
            }
        }
        for &class in classes {
            if !self.citation_models.iter().any(|m| m.class == class) {
                return bad(
                    "citation_models".into(),
                    &format!("missing a model for class {class}"),
                );
            }
        }
        for (i, m) in self.citation_models.iter().enumerate() {
            if !classes.contains(&m.class) {
                return bad(format!("citation_models[{i}].class"), "not a class of this label mode");
            }
            if m.ln_sigma < 0.0 || !m.ln_sigma.is_finite() || !m.ln_mean.is_finite() {
                return bad(format!("citation_models[{i}]"), "parameters must be finite, sigma ≥ 0");
            }
        }
        if self.journals.is_empty() {
            return bad("journals".into(), "must list at least one journal");
        }
        for (i, j) in self.journals.iter().enumerate() {
            if !classes.contains(&j.bias_class) {
                return bad(format!("journals[{i}].bias_class"), "not a class of this label mode");
            }
            if !(0.0..=1.0).contains(&j.strength) {
                return bad(format!("journals[{i}].strength"), "must lie in [0,1]");
            }
        }
        if self.year_min > self.year_max {
            return bad("year_min".into(), "must be ≤ year_max");
        }
        for (path, v) in [
            ("noise", self.noise),
            ("duplicate_rate", self.duplicate_rate),
            ("duplicate_cross_uoa", self.duplicate_cross_uoa),
            ("duplicate_same_score_within", self.duplicate_same_score_within),
            ("duplicate_same_score_between", self.duplicate_same_score_between),
            ("pages_missing_rate", self.pages_missing_rate),
            ("subgroups.ecr", self.subgroups.ecr),
            ("subgroups.interdisciplinary", self.subgroups.interdisciplinary),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(path.into(), "must lie in [0,1]");
            }
        }
        if !(0.0..=1.0).contains(&(self.subgroups.female + self.subgroups.male)) {
            return bad("subgroups".into(), "female + male must lie in [0,1]");
        }
        if self.vocab_drift < 0.0 || !self.vocab_drift.is_finite() {
            return bad("vocab_drift".into(), "must be ≥ 0");
        }
        if self.institution_pool == 0 {
            return bad("institution_pool".into(), "must be ≥ 1");
        }
        if self.fields_per_uoa == 0 {
            return bad("fields_per_uoa".into(), "must be ≥ 1");
        }
        Ok(())
    }
}

/// Filler vocabulary for abstract assembly; drawn with a skewed weight so
/// document frequencies spread out the way natural text does.
const FILLER_WORDS: [&str; 162] = [
    "the", "of", "and", "in", "to", "a", "is", "that", "for", "with", "are", "this", "on", "be",
    "as", "by", "an", "from", "study", "results", "analysis", "data", "model", "method", "using",
    "based", "approach", "between", "effect", "effects", "however", "these", "which", "was",
    "were", "been", "has", "have", "can", "may", "more", "also", "used", "show", "shown", "found",
    "findings", "significant", "observed", "measured", "proposed", "present", "paper", "research",
    "sample", "samples", "values", "level", "levels", "higher", "lower", "increase", "decrease",
    "compared", "control", "group", "groups", "time", "temperature", "structure", "function",
    "process", "system", "systems", "response", "factors", "conditions", "performance",
    "properties", "surface", "field", "theory", "framework", "evidence", "literature", "review",
    "experimental", "numerical", "statistical", "evaluation", "assessment", "estimation",
    "measurement", "distribution", "parameters", "variables", "correlation", "regression",
    "classification", "prediction", "relationship", "mechanism", "dynamics", "interaction",
    "population", "treatment", "patients", "cells", "protein", "energy", "material", "materials",
    "network", "networks", "information", "knowledge", "development", "application",
    "applications", "potential", "important", "different", "various", "several", "specific",
    "general", "novel", "recent", "previous", "further", "large", "small", "high", "low", "both",
    "each", "under", "over", "through", "during", "after", "before", "within", "across", "could",
    "would", "should", "must", "well", "thus", "therefore", "moreover", "although", "while",
    "when", "where", "than", "into", "some", "most", "many", "its",
];

struct Pools {
    filler: WeightedIndex<f64>,
    /// Institution sampling distribution per class index.
    institutions: Vec<WeightedIndex<f64>>,
    /// Journal sampling distribution per class index.
    journals: Vec<WeightedIndex<f64>>,
}

fn build_pools(spec: &SyntheticSpec) -> Pools {
    let classes = spec.scheme().classes();
    let filler_weights: Vec<f64> = (0..FILLER_WORDS.len())
        .map(|i| 1.0 / (i as f64 + 2.0).powf(0.7))
        .collect();

    let pool = spec.institution_pool;
    let mid = (classes.len() as f64 - 1.0) / 2.0;
    let institutions = (0..classes.len())
        .map(|ci| {
            let offset = ci as f64 - mid;
            let weights: Vec<f64> = (0..pool)
                .map(|i| {
                    let size = 1.0 / (i as f64 + 1.0);
                    let affinity = if pool > 1 {
                        spec.institution_tilt * (1.0 - 2.0 * i as f64 / (pool as f64 - 1.0))
                    } else {
                        0.0
                    };
                    size * (affinity * offset).exp()
                })
                .collect();
            WeightedIndex::new(weights).expect("institution weights are positive")
        })
        .collect();

    let journals = classes
        .iter()
        .map(|&class| {
            let weights: Vec<f64> = spec
                .journals
                .iter()
                .map(|j| {
                    if j.bias_class == class {
                        j.strength.max(1e-12)
                    } else {
                        ((1.0 - j.strength) / (classes.len() as f64 - 1.0).max(1.0)).max(1e-12)
                    }
                })
                .collect();
            WeightedIndex::new(weights).expect("journal weights are positive")
        })
        .collect();

    Pools {
        filler: WeightedIndex::new(filler_weights).expect("filler weights are positive"),
        institutions,
        journals,
    }
}

fn filler_word(pools: &Pools, rng: &mut ChaCha8Rng) -> &'static str {
    FILLER_WORDS[pools.filler.sample(rng)]
}

/// Applies vocabulary drift: beyond the first year, planted tokens are
/// increasingly replaced by year-tagged variants.
fn drifted(token: &str, year: i32, spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> String {
    let age = (year - spec.year_min).max(0) as f64;
    let p = (spec.vocab_drift * age).clamp(0.0, 1.0);
    if p > 0.0 && rng.random::<f64>() < p {
        format!("{token}v{year}")
    } else {
        token.to_owned()
    }
}

fn score_for_class(class: u8, mode: LabelMode, rng: &mut ChaCha8Rng) -> u8 {
    if mode == LabelMode::ThreeClass && class == 2 {
        // The merged low class corresponds to raw scores 1 and 2.
        if rng.random_range(0..2u8) == 0 {
            1
        } else {
            2
        }
    } else {
        class
    }
}

/// Generates a labeled synthetic corpus. Deterministic given (spec, seed).
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Vec<ArticleRecord>> {
    spec.validate()?;
    let scheme = spec.scheme();
    let classes = scheme.classes();
    let mid = (classes.len() as f64 - 1.0) / 2.0;
    let pools = build_pools(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut citation_by_class = vec![LogNormal::new(0.0, 1.0).unwrap(); classes.len()];
    for m in &spec.citation_models {
        let ci = scheme.class_index(m.class).unwrap();
        citation_by_class[ci] = LogNormal::new(m.ln_mean, m.ln_sigma.max(1e-12))
            .map_err(|e| Error::InvalidSpec(format!("citation_models: {e}")))?;
    }

    let mut records = Vec::new();
    let mut duplicates = Vec::new();

    for uoa_spec in &spec.uoas {
        let prior = WeightedIndex::new(&uoa_spec.prior)
            .map_err(|e| Error::InvalidSpec(format!("uoas prior: {e}")))?;
        for i in 0..uoa_spec.n_articles {
            let class_index = prior.sample(&mut rng);
            let class = classes[class_index];
            let offset = class_index as f64 - mid;
            let year = rng.random_range(spec.year_min..=spec.year_max);
            let field_k = rng.random_range(0..spec.fields_per_uoa);
            let field_id = format!("f{:02}-{field_k}", uoa_spec.uoa);

            let citations = citation_by_class[class_index]
                .sample(&mut rng)
                .clamp(0.0, 1e9)
                .round() as u64;

            // Title: filler words, sometimes one planted token.
            let planted_for_class: Vec<&str> = spec
                .planted
                .iter()
                .filter(|p| p.class == class)
                .flat_map(|p| p.tokens.iter().map(String::as_str))
                .collect();
            let mut title_words: Vec<String> = (0..rng.random_range(6..=11))
                .map(|_| filler_word(&pools, &mut rng).to_owned())
                .collect();
            if !planted_for_class.is_empty() && rng.random::<f64>() < 0.4 {
                let tok = planted_for_class[rng.random_range(0..planted_for_class.len())];
                let tok = drifted(tok, year, spec, &mut rng);
                let pos = rng.random_range(0..=title_words.len());
                title_words.insert(pos, tok);
            }
            let title = title_words.join(" ");

            // Abstract: filler sentences with planted tokens mixed in.
            let base = spec.sentences_per_abstract.max(4);
            let n_sentences = rng.random_range(base - 2..=base + 2);
            let mut sentences: Vec<Vec<String>> = (0..n_sentences)
                .map(|_| {
                    (0..rng.random_range(7..=13))
                        .map(|_| filler_word(&pools, &mut rng).to_owned())
                        .collect()
                })
                .collect();
            let mut any_planted = false;
            for p in spec.planted.iter().filter(|p| p.class == class) {
                for token in &p.tokens {
                    if rng.random::<f64>() < p.inclusion_prob {
                        any_planted = true;
                        let tok = drifted(token, year, spec, &mut rng);
                        let s = rng.random_range(0..sentences.len());
                        let pos = rng.random_range(0..=sentences[s].len());
                        sentences[s].insert(pos, tok);
                    }
                }
            }
            if !any_planted && !planted_for_class.is_empty() {
                // Guarantee at least one class marker per abstract.
                let tok = planted_for_class[rng.random_range(0..planted_for_class.len())];
                let tok = drifted(tok, year, spec, &mut rng);
                let s = rng.random_range(0..sentences.len());
                let pos = rng.random_range(0..=sentences[s].len());
                sentences[s].insert(pos, tok);
            }
            let mut abstract_text = sentences
                .iter()
                .map(|s| format!("{}.", s.join(" ")))
                .collect::<Vec<_>>()
                .join(" ");
            while abstract_text.chars().count() < 520 {
                let extra: Vec<String> = (0..rng.random_range(7..=13))
                    .map(|_| filler_word(&pools, &mut rng).to_owned())
                    .collect();
                abstract_text.push_str(&format!(" {}.", extra.join(" ")));
            }

            // Keywords: a few fillers, occasionally a planted token.
            let n_keywords = rng.random_range(2..=5);
            let keywords: Vec<String> = (0..n_keywords)
                .map(|_| {
                    if !planted_for_class.is_empty() && rng.random::<f64>() < 0.25 {
                        let tok =
                            planted_for_class[rng.random_range(0..planted_for_class.len())];
                        drifted(tok, year, spec, &mut rng)
                    } else if rng.random::<f64>() < 0.3 {
                        format!(
                            "{} {}",
                            filler_word(&pools, &mut rng),
                            filler_word(&pools, &mut rng)
                        )
                    } else {
                        filler_word(&pools, &mut rng).to_owned()
                    }
                })
                .collect();

            let journal = spec.journals[pools.journals[class_index].sample(&mut rng)]
                .name
                .clone();
            let institution = format!(
                "inst{:02}",
                pools.institutions[class_index].sample(&mut rng)
            );

            let n_authors = (LogNormal::<f64>::new(1.2, 0.7).unwrap().sample(&mut rng).round()
                as u32)
                .clamp(1, 50);
            let n_institutions = rng.random_range(1..=n_authors.min(5));
            let n_countries = rng.random_range(1..=n_institutions);
            let first_author_pubs = LogNormal::new(2.0 + 0.2 * offset, 0.8)
                .unwrap()
                .sample(&mut rng)
                .clamp(0.0, 1e6)
                .round() as u64;
            let first_author_mnlcs = Normal::new(0.2 * offset, 0.4)
                .unwrap()
                .sample(&mut rng)
                .exp();
            let other_author_mnlcs = Normal::new(0.2 * offset + 0.1, 0.4)
                .unwrap()
                .sample(&mut rng)
                .exp();
            let max_author_mnlcs = first_author_mnlcs.max(other_author_mnlcs);
            let pages = if rng.random::<f64>() < spec.pages_missing_rate {
                None
            } else {
                Some(
                    (LogNormal::<f64>::new(2.4, 0.35).unwrap().sample(&mut rng).round() as u32)
                        .clamp(2, 80),
                )
            };

            let ecr = Some(rng.random::<f64>() < spec.subgroups.ecr);
            let g = rng.random::<f64>();
            let gender_label = Some(if g < spec.subgroups.female {
                Gender::F
            } else if g < spec.subgroups.female + spec.subgroups.male {
                Gender::M
            } else {
                Gender::Unknown
            });
            let interdisciplinary = Some(rng.random::<f64>() < spec.subgroups.interdisciplinary);

            // Label noise: uniform replacement over all classes.
            let label_class = if spec.noise > 0.0 && rng.random::<f64>() < spec.noise {
                classes[rng.random_range(0..classes.len())]
            } else {
                class
            };
            let score = score_for_class(label_class, spec.label_mode, &mut rng);

            let id = format!("u{:02}a{:05}", uoa_spec.uoa, i);
            let record = ArticleRecord {
                id: id.clone(),
                doi_group: id.clone(),
                uoa: uoa_spec.uoa,
                year,
                score: Some(score),
                title,
                abstract_text,
                keywords,
                journal,
                field_id,
                citations,
                n_authors,
                n_institutions,
                n_countries,
                first_author_pubs,
                first_author_mnlcs,
                max_author_mnlcs,
                pages,
                institution,
                ecr,
                gender_label,
                interdisciplinary,
            };

            if rng.random::<f64>() < spec.duplicate_rate {
                let cross = spec.uoas.len() > 1 && rng.random::<f64>() < spec.duplicate_cross_uoa;
                let dup_uoa = if cross {
                    let others: Vec<u8> = spec
                        .uoas
                        .iter()
                        .map(|u| u.uoa)
                        .filter(|&u| u != uoa_spec.uoa)
                        .collect();
                    others[rng.random_range(0..others.len())]
                } else {
                    uoa_spec.uoa
                };
                let same_prob = if cross {
                    spec.duplicate_same_score_between
                } else {
                    spec.duplicate_same_score_within
                };
                let dup_score = if rng.random::<f64>() < same_prob {
                    score
                } else {
                    let other_classes: Vec<u8> = classes
                        .iter()
                        .copied()
                        .filter(|&c| c != scheme.class_of(score))
                        .collect();
                    let c = other_classes[rng.random_range(0..other_classes.len())];
                    score_for_class(c, spec.label_mode, &mut rng)
                };
                let mut dup = record.clone();
                dup.id = format!("{id}-dup");
                dup.uoa = dup_uoa;
                dup.score = Some(dup_score);
                dup.institution = format!(
                    "inst{:02}",
                    pools.institutions[class_index].sample(&mut rng)
                );
                duplicates.push(dup);
            }

            records.push(record);
        }
    }

    records.extend(duplicates);
    Ok(records)
}
