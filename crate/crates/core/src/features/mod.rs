//! Feature engineering: citation normalization, readability, imputation,
//! chi-square term selection and matrix assembly.
//!
//! Three input sets are supported: 9 bibliometric columns, those plus a
//! journal citation value (10), or those plus selected binary text columns
//! up to `k_total`. Everything downstream of ingestion is deterministic;
//! statistics are fitted on whichever rows the caller designates as
//! training data.

pub mod matrix;
pub mod select;
pub mod text;

use std::collections::BTreeMap;

use crate::corpus::ArticleRecord;
use crate::error::{Error, Result};

pub use matrix::{build_matrix, build_matrix_with_terms, FeatureMatrix, InputSet};
pub use select::{
    chi2_from_counts, chi_square, select_features, term_association_report, vocabulary_to_csv,
    VocabEntry, Vocabulary,
};
pub use text::{article_terms, flesch_kincaid, sentence_words, syllables, tokenize, Term, TermKind};

#[derive(Debug, Clone, Copy)]
struct Cell {
    mean: f64,
    count: usize,
}

/// Per-(field, year) means of ln(1+citations), fitted on a designated set
/// of articles, plus the pooled mean over all of them.
#[derive(Debug, Clone)]
pub struct FieldYearStats {
    cells: BTreeMap<String, BTreeMap<i32, Cell>>,
    global_mean: f64,
    n_articles: usize,
}

impl FieldYearStats {
    /// Mean of ln(1+citations) in one cell, if the cell was fitted.
    pub fn cell_mean(&self, field_id: &str, year: i32) -> Option<f64> {
        self.cells.get(field_id)?.get(&year).map(|c| c.mean)
    }

    pub fn cell_count(&self, field_id: &str, year: i32) -> Option<usize> {
        self.cells.get(field_id)?.get(&year).map(|c| c.count)
    }

    pub fn n_cells(&self) -> usize {
        self.cells.values().map(BTreeMap::len).sum()
    }

    pub fn n_articles(&self) -> usize {
        self.n_articles
    }

    /// Pooled mean of ln(1+citations) over every fitted article; the
    /// fallback normalizer for cells outside the fitted set.
    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }
}

pub(crate) fn log_citations(citations: u64) -> f64 {
    (citations as f64).ln_1p()
}

/// Fits per-cell citation statistics on a row subset of the corpus.
pub fn field_year_stats_rows(corpus: &[ArticleRecord], rows: &[usize]) -> Result<FieldYearStats> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("field_year_stats"));
    }
    let mut sums: BTreeMap<String, BTreeMap<i32, (f64, usize)>> = BTreeMap::new();
    let mut total = 0.0;
    for &r in rows {
        let a = &corpus[r];
        let v = log_citations(a.citations);
        total += v;
        let slot = sums.entry(a.field_id.clone()).or_default().entry(a.year).or_insert((0.0, 0));
        slot.0 += v;
        slot.1 += 1;
    }
    let cells = sums
        .into_iter()
        .map(|(field, years)| {
            let years = years
                .into_iter()
                .map(|(y, (sum, count))| (y, Cell { mean: sum / count as f64, count }))
                .collect();
            (field, years)
        })
        .collect();
    Ok(FieldYearStats { cells, global_mean: total / rows.len() as f64, n_articles: rows.len() })
}

/// Fits per-cell citation statistics on the whole corpus.
pub fn field_year_stats(corpus: &[ArticleRecord]) -> Result<FieldYearStats> {
    let rows: Vec<usize> = (0..corpus.len()).collect();
    field_year_stats_rows(corpus, &rows)
}

/// Normalized log citation score: ln(1+citations) over the cell mean.
/// A zero-mean cell (every fitted article uncited) maps to 1.0, making the
/// whole cell average-by-definition rather than dividing by zero.
pub fn nlcs(citations: u64, field_id: &str, year: i32, stats: &FieldYearStats) -> Result<f64> {
    let mean = stats
        .cell_mean(field_id, year)
        .ok_or_else(|| Error::MissingCell { field_id: field_id.to_owned(), year })?;
    if mean == 0.0 {
        Ok(1.0)
    } else {
        Ok(log_citations(citations) / mean)
    }
}

/// Per-journal mean of the normalized citation score over the given rows.
pub fn journal_mnlcs(
    corpus: &[ArticleRecord],
    rows: &[usize],
    stats: &FieldYearStats,
) -> Result<BTreeMap<String, f64>> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for &r in rows {
        let a = &corpus[r];
        let v = nlcs(a.citations, &a.field_id, a.year, stats)?;
        let slot = sums.entry(a.journal.clone()).or_insert((0.0, 0));
        slot.0 += v;
        slot.1 += 1;
    }
    Ok(sums.into_iter().map(|(j, (sum, count))| (j, sum / count as f64)).collect())
}

/// The training-derived statistics a feature matrix needs: citation cell
/// means and per-journal citation values.
#[derive(Debug, Clone)]
pub struct FeatureStats {
    pub field_year: FieldYearStats,
    pub journal_values: BTreeMap<String, f64>,
}

impl FeatureStats {
    pub fn fit_rows(corpus: &[ArticleRecord], rows: &[usize]) -> Result<Self> {
        let field_year = field_year_stats_rows(corpus, rows)?;
        let journal_values = journal_mnlcs(corpus, rows, &field_year)?;
        Ok(FeatureStats { field_year, journal_values })
    }

    pub fn fit(corpus: &[ArticleRecord]) -> Result<Self> {
        let rows: Vec<usize> = (0..corpus.len()).collect();
        Self::fit_rows(corpus, &rows)
    }

    /// Journal citation value; a journal absent from the fitted rows gets
    /// the neutral field-average value 1.0.
    pub fn journal_value(&self, journal: &str) -> f64 {
        self.journal_values.get(journal).copied().unwrap_or(1.0)
    }
}

/// Median of a non-empty list (mean of the two middles for even lengths).
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Fills absent per-article values with the median of present values in the
/// same uoa; a uoa with none present falls back to the global median; if
/// nothing is present anywhere, zeros plus a warning.
fn impute_by_uoa(values: &[Option<f64>], uoas: &[u8], what: &str) -> (Vec<f64>, Vec<String>) {
    assert_eq!(values.len(), uoas.len());
    let mut warnings = Vec::new();
    let mut present_global: Vec<f64> = values.iter().flatten().copied().collect();
    if present_global.is_empty() {
        warnings.push(format!("{what}: absent for every article; imputing 0 everywhere"));
        return (vec![0.0; values.len()], warnings);
    }
    let global = median(&mut present_global);
    let mut per_uoa: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            per_uoa.entry(uoas[i]).or_default().push(*v);
        }
    }
    let medians: BTreeMap<u8, f64> =
        per_uoa.into_iter().map(|(u, mut vs)| (u, median(&mut vs))).collect();
    let out = values
        .iter()
        .enumerate()
        .map(|(i, v)| v.unwrap_or_else(|| medians.get(&uoas[i]).copied().unwrap_or(global)))
        .collect();
    (out, warnings)
}

/// Page counts with absences imputed by uoa median.
pub fn impute_pages(corpus: &[ArticleRecord]) -> (Vec<f64>, Vec<String>) {
    let values: Vec<Option<f64>> = corpus.iter().map(|a| a.pages.map(f64::from)).collect();
    let uoas: Vec<u8> = corpus.iter().map(|a| a.uoa).collect();
    impute_by_uoa(&values, &uoas, "pages")
}

/// Readability grades with unreadable (wordless) abstracts imputed by uoa
/// median, mirroring the pages rule.
pub fn impute_readability(corpus: &[ArticleRecord]) -> (Vec<f64>, Vec<String>) {
    let values: Vec<Option<f64>> = corpus
        .iter()
        .map(|a| flesch_kincaid(&crate::corpus::clean_text(&a.abstract_text)))
        .collect();
    let uoas: Vec<u8> = corpus.iter().map(|a| a.uoa).collect();
    impute_by_uoa(&values, &uoas, "readability")
}

/// Per-article imputed columns, aligned with the corpus, plus any warnings
/// raised while imputing.
#[derive(Debug, Clone)]
pub struct Imputations {
    pub pages: Vec<f64>,
    pub readability: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn compute_imputations(corpus: &[ArticleRecord]) -> Imputations {
    let (pages, mut warnings) = impute_pages(corpus);
    let (readability, more) = impute_readability(corpus);
    warnings.extend(more);
    Imputations { pages, readability, warnings }
}
