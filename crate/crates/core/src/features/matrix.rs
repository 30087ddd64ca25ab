//! Feature-matrix assembly: dense bibliometric columns plus sparse binary
//! text columns, with both row-wise (adjacency) and column-wise (bitset)
//! views of the sparse part so tree learners can pick whichever access
//! pattern is cheaper for a node.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::ArticleRecord;
use crate::error::{Error, Result};
use crate::features::select::Vocabulary;
use crate::features::text::{article_terms, Term};
use crate::features::{log_citations, FeatureStats, Imputations};

/// Which feature family a matrix carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum InputSet {
    /// 9 bibliometric columns.
    BiblioOnly,
    /// Bibliometrics plus the journal citation value: 10 columns.
    WithJournal,
    /// Bibliometrics, journal value, and selected text columns.
    WithText,
}

impl InputSet {
    pub fn id(self) -> u8 {
        match self {
            InputSet::BiblioOnly => 1,
            InputSet::WithJournal => 2,
            InputSet::WithText => 3,
        }
    }

    pub fn n_dense(self) -> usize {
        match self {
            InputSet::BiblioOnly => 9,
            InputSet::WithJournal | InputSet::WithText => 10,
        }
    }
}

impl TryFrom<u8> for InputSet {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(InputSet::BiblioOnly),
            2 => Ok(InputSet::WithJournal),
            3 => Ok(InputSet::WithText),
            other => Err(format!("input_set must be 1, 2 or 3, got {other}")),
        }
    }
}

impl From<InputSet> for u8 {
    fn from(v: InputSet) -> u8 {
        v.id()
    }
}

const DENSE_NAMES: [&str; 10] = [
    "nlcs",
    "log_authors",
    "log_institutions",
    "log_countries",
    "log_first_author_pubs",
    "first_author_mnlcs",
    "max_author_mnlcs",
    "pages",
    "readability",
    "journal_mnlcs",
];

/// Row-aligned feature matrix. Dense columns are stored column-major; text
/// columns are binary, stored both as per-row sorted column lists and as
/// per-column row bitsets.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub input_set: InputSet,
    pub ids: Vec<String>,
    dense: Vec<Vec<f64>>,
    text_terms: Vec<Term>,
    row_terms: Vec<Vec<u32>>,
    col_bits: Vec<Vec<u64>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_dense(&self) -> usize {
        self.dense.len()
    }

    pub fn n_text(&self) -> usize {
        self.text_terms.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_dense() + self.n_text()
    }

    pub fn dense_names(&self) -> &'static [&'static str] {
        &DENSE_NAMES[..self.n_dense()]
    }

    pub fn text_terms(&self) -> &[Term] {
        &self.text_terms
    }

    pub fn dense_value(&self, row: usize, dense_col: usize) -> f64 {
        self.dense[dense_col][row]
    }

    pub fn dense_column(&self, dense_col: usize) -> &[f64] {
        &self.dense[dense_col]
    }

    /// Binary presence of text column `text_col` in `row`, via the bitset.
    pub fn text_present(&self, row: usize, text_col: usize) -> bool {
        self.col_bits[text_col][row / 64] >> (row % 64) & 1 == 1
    }

    /// Sorted text-column indices present in a row.
    pub fn row_text_cols(&self, row: usize) -> &[u32] {
        &self.row_terms[row]
    }

    /// Unified cell accessor over the dense-then-text column order.
    pub fn value(&self, row: usize, col: usize) -> f64 {
        if col < self.n_dense() {
            self.dense[col][row]
        } else if self.text_present(row, col - self.n_dense()) {
            1.0
        } else {
            0.0
        }
    }

    /// New matrix restricted to the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> FeatureMatrix {
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        let dense = self
            .dense
            .iter()
            .map(|col| rows.iter().map(|&r| col[r]).collect())
            .collect();
        let row_terms: Vec<Vec<u32>> =
            rows.iter().map(|&r| self.row_terms[r].clone()).collect();
        let col_bits = bitsets_from_rows(&row_terms, self.text_terms.len(), rows.len());
        FeatureMatrix {
            input_set: self.input_set,
            ids,
            dense,
            text_terms: self.text_terms.clone(),
            row_terms,
            col_bits,
        }
    }

    /// Hand-assembles a matrix for learner unit tests: `dense` is
    /// column-major, `row_terms` lists each row's present text columns.
    #[cfg(test)]
    pub(crate) fn from_parts_for_tests(
        dense: Vec<Vec<f64>>,
        n_text: usize,
        row_terms: Vec<Vec<u32>>,
    ) -> FeatureMatrix {
        let n_rows = dense.first().map_or(row_terms.len(), Vec::len);
        assert!(dense.iter().all(|c| c.len() == n_rows));
        assert_eq!(row_terms.len(), n_rows);
        let mut row_terms = row_terms;
        for terms in &mut row_terms {
            terms.sort_unstable();
        }
        let col_bits = bitsets_from_rows(&row_terms, n_text, n_rows);
        FeatureMatrix {
            input_set: InputSet::BiblioOnly,
            ids: (0..n_rows).map(|i| format!("r{i}")).collect(),
            dense,
            text_terms: (0..n_text)
                .map(|i| (crate::features::text::TermKind::Unigram, format!("t{i}")))
                .collect(),
            row_terms,
            col_bits,
        }
    }

    /// Writes the matrix as CSV with header `id,f1..fk`.
    pub fn to_csv<W: Write>(&self, writer: &mut W) -> Result<()> {
        let mut header = String::from("id");
        for k in 1..=self.n_cols() {
            header.push_str(&format!(",f{k}"));
        }
        header.push('\n');
        writer.write_all(header.as_bytes())?;
        for row in 0..self.n_rows() {
            let mut line = self.ids[row].clone();
            for col in 0..self.n_dense() {
                line.push_str(&format!(",{}", self.dense[col][row]));
            }
            let mut present = self.row_terms.get(row).map(|t| t.iter().peekable());
            for t in 0..self.n_text() {
                let hit = match present.as_mut() {
                    Some(it) => {
                        if it.peek() == Some(&&(t as u32)) {
                            it.next();
                            true
                        } else {
                            false
                        }
                    }
                    None => false,
                };
                line.push_str(if hit { ",1" } else { ",0" });
            }
            line.push('\n');
            writer.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

fn bitsets_from_rows(row_terms: &[Vec<u32>], n_text: usize, n_rows: usize) -> Vec<Vec<u64>> {
    let words = n_rows.div_ceil(64);
    let mut bits = vec![vec![0u64; words]; n_text];
    for (row, terms) in row_terms.iter().enumerate() {
        for &t in terms {
            bits[t as usize][row / 64] |= 1 << (row % 64);
        }
    }
    bits
}

/// Builds a matrix when per-article term sets are already available (they
/// are expensive to tokenize, so pipelines cache them). `term_sets` may be
/// empty unless `input_set` carries text columns. With `lenient_cells` set,
/// an article whose (field, year) cell is missing from the fitted
/// statistics is normalized by the pooled training mean instead of failing;
/// pipelines that score unseen years rely on this.
pub fn build_matrix_with_terms(
    articles: &[ArticleRecord],
    term_sets: &[BTreeSet<Term>],
    input_set: InputSet,
    stats: &FeatureStats,
    vocabulary: Option<&Vocabulary>,
    imputations: &Imputations,
    lenient_cells: bool,
) -> Result<FeatureMatrix> {
    assert_eq!(imputations.pages.len(), articles.len());
    assert_eq!(imputations.readability.len(), articles.len());
    let vocab = match (input_set, vocabulary) {
        (InputSet::WithText, Some(v)) => Some(v),
        (InputSet::WithText, None) => {
            return Err(Error::InvalidSpec(
                "input set 3 requires a selected vocabulary".to_owned(),
            ))
        }
        _ => None,
    };
    if vocab.is_some() {
        assert_eq!(term_sets.len(), articles.len());
    }

    let n_dense = input_set.n_dense();
    let mut dense = vec![Vec::with_capacity(articles.len()); n_dense];
    for (row, a) in articles.iter().enumerate() {
        let nlcs = match stats.field_year.cell_mean(&a.field_id, a.year) {
            Some(mean) if mean > 0.0 => log_citations(a.citations) / mean,
            Some(_) => 1.0,
            None if lenient_cells => {
                let g = stats.field_year.global_mean();
                if g > 0.0 {
                    log_citations(a.citations) / g
                } else {
                    1.0
                }
            }
            None => {
                return Err(Error::Value {
                    row,
                    field: "field_id",
                    message: format!(
                        "article {}: no fitted statistics for field-year cell ({}, {})",
                        a.id, a.field_id, a.year
                    ),
                })
            }
        };
        dense[0].push(nlcs);
        dense[1].push(f64::from(a.n_authors).ln_1p());
        dense[2].push(f64::from(a.n_institutions).ln_1p());
        dense[3].push(f64::from(a.n_countries).ln_1p());
        dense[4].push(log_citations(a.first_author_pubs).max(0.0));
        dense[5].push(a.first_author_mnlcs);
        dense[6].push(a.max_author_mnlcs);
        dense[7].push(imputations.pages[row]);
        dense[8].push(imputations.readability[row]);
        if n_dense == 10 {
            dense[9].push(stats.journal_value(&a.journal));
        }
    }

    let (text_terms, row_terms) = match vocab {
        Some(v) => {
            let terms = v.terms();
            let index: BTreeMap<&Term, u32> =
                terms.iter().enumerate().map(|(i, t)| (t, i as u32)).collect();
            let rows = term_sets
                .iter()
                .map(|set| {
                    let mut cols: Vec<u32> =
                        set.iter().filter_map(|t| index.get(t).copied()).collect();
                    cols.sort_unstable();
                    cols
                })
                .collect();
            (terms, rows)
        }
        None => (Vec::new(), vec![Vec::new(); articles.len()]),
    };
    let col_bits = bitsets_from_rows(&row_terms, text_terms.len(), articles.len());

    Ok(FeatureMatrix {
        input_set,
        ids: articles.iter().map(|a| a.id.clone()).collect(),
        dense,
        text_terms,
        row_terms,
        col_bits,
    })
}

/// Builds a matrix straight from articles, tokenizing as needed.
pub fn build_matrix(
    articles: &[ArticleRecord],
    input_set: InputSet,
    stats: &FeatureStats,
    vocabulary: Option<&Vocabulary>,
    imputations: &Imputations,
) -> Result<FeatureMatrix> {
    let term_sets: Vec<BTreeSet<Term>> = if input_set == InputSet::WithText {
        articles.iter().map(article_terms).collect()
    } else {
        Vec::new()
    };
    build_matrix_with_terms(articles, &term_sets, input_set, stats, vocabulary, imputations, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::minimal_record;
    use crate::features::select::select_features;
    use crate::features::{compute_imputations, FeatureStats};

    fn small_corpus() -> Vec<ArticleRecord> {
        let mut a = minimal_record("a");
        a.abstract_text = "Alpha methods shine. We like them.".into();
        a.journal = "j-one".into();
        a.citations = 4;
        let mut b = minimal_record("b");
        b.abstract_text = "Beta methods disappoint. We dislike them.".into();
        b.journal = "j-two".into();
        b.citations = 1;
        b.score = Some(2);
        vec![a, b]
    }

    fn built(input_set: InputSet, k_total: usize) -> FeatureMatrix {
        let corpus = small_corpus();
        let stats = FeatureStats::fit(&corpus).unwrap();
        let imputations = compute_imputations(&corpus);
        let vocab = if input_set == InputSet::WithText {
            let term_sets: Vec<_> = corpus.iter().map(article_terms).collect();
            let labels: Vec<u8> = corpus.iter().map(|a| a.score.unwrap()).collect();
            Some(select_features(&term_sets, &labels, k_total, 10).unwrap())
        } else {
            None
        };
        build_matrix(&corpus, input_set, &stats, vocab.as_ref(), &imputations).unwrap()
    }

    #[test]
    fn input_set_column_counts() {
        assert_eq!(built(InputSet::BiblioOnly, 0).n_cols(), 9);
        assert_eq!(built(InputSet::WithJournal, 0).n_cols(), 10);
        let m = built(InputSet::WithText, 30);
        assert_eq!(m.n_dense(), 10);
        assert_eq!(m.n_cols(), 10 + m.n_text());
    }

    #[test]
    fn text_columns_are_binary_and_match_terms() {
        let m = built(InputSet::WithText, 40);
        let alpha = m
            .text_terms()
            .iter()
            .position(|(_, tok)| tok == "alpha")
            .expect("alpha selected");
        assert!(m.text_present(0, alpha));
        assert!(!m.text_present(1, alpha));
        assert_eq!(m.value(0, 10 + alpha), 1.0);
        assert_eq!(m.value(1, 10 + alpha), 0.0);
        for row in 0..m.n_rows() {
            let listed: Vec<u32> = m.row_text_cols(row).to_vec();
            let via_bits: Vec<u32> = (0..m.n_text())
                .filter(|&t| m.text_present(row, t))
                .map(|t| t as u32)
                .collect();
            assert_eq!(listed, via_bits);
        }
    }

    #[test]
    fn missing_vocabulary_for_text_set_is_an_error() {
        let corpus = small_corpus();
        let stats = FeatureStats::fit(&corpus).unwrap();
        let imputations = compute_imputations(&corpus);
        let err =
            build_matrix(&corpus, InputSet::WithText, &stats, None, &imputations).unwrap_err();
        assert!(err.to_string().contains("vocabulary"));
    }

    #[test]
    fn unseen_cell_errors_strictly_and_falls_back_leniently() {
        let corpus = small_corpus();
        let imputations = compute_imputations(&corpus);
        let mut moved = corpus.clone();
        moved[1].year = 1999;
        let stats = FeatureStats::fit_rows(&moved, &[0]).unwrap();
        let err = build_matrix(&moved, InputSet::BiblioOnly, &stats, None, &imputations)
            .unwrap_err();
        assert!(err.to_string().contains("article b"), "{err}");

        let m = build_matrix_with_terms(
            &moved,
            &[],
            InputSet::BiblioOnly,
            &stats,
            None,
            &imputations,
            true,
        )
        .unwrap();
        let expected = 2f64.ln() / stats.field_year.global_mean();
        assert!((m.dense_value(1, 0) - expected).abs() < 1e-12);
    }

    #[test]
    fn single_article_rebuild_matches_row() {
        let corpus = small_corpus();
        let stats = FeatureStats::fit(&corpus).unwrap();
        let imputations = compute_imputations(&corpus);
        let term_sets: Vec<_> = corpus.iter().map(article_terms).collect();
        let labels: Vec<u8> = corpus.iter().map(|a| a.score.unwrap()).collect();
        let vocab = select_features(&term_sets, &labels, 40, 10).unwrap();
        let full = build_matrix_with_terms(
            &corpus,
            &term_sets,
            InputSet::WithText,
            &stats,
            Some(&vocab),
            &imputations,
            false,
        )
        .unwrap();
        for row in 0..corpus.len() {
            let one = build_matrix_with_terms(
                &corpus[row..=row],
                &term_sets[row..=row],
                InputSet::WithText,
                &stats,
                Some(&vocab),
                &Imputations {
                    pages: vec![imputations.pages[row]],
                    readability: vec![imputations.readability[row]],
                    warnings: vec![],
                },
                false,
            )
            .unwrap();
            for col in 0..full.n_cols() {
                assert_eq!(full.value(row, col).to_bits(), one.value(0, col).to_bits());
            }
        }
    }

    #[test]
    fn subset_preserves_values() {
        let m = built(InputSet::WithText, 40);
        let s = m.subset(&[1]);
        assert_eq!(s.n_rows(), 1);
        assert_eq!(s.ids[0], "b");
        for col in 0..m.n_cols() {
            assert_eq!(s.value(0, col).to_bits(), m.value(1, col).to_bits());
        }
    }

    #[test]
    fn csv_header_and_shape() {
        let m = built(InputSet::BiblioOnly, 0);
        let mut out = Vec::new();
        m.to_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "id,f1,f2,f3,f4,f5,f6,f7,f8,f9"
        );
        assert_eq!(lines.count(), 2);
    }
}
