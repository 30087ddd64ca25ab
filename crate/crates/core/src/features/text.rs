//! Sentence-aware n-gram extraction and readability grading.
//!
//! Text is lowercased, split into sentences on runs of `.`/`!`/`?` followed
//! by whitespace (or end of text), and each sentence into words: maximal
//! runs of alphanumeric-or-hyphen characters containing at least one
//! alphanumeric. Unigrams, bigrams and trigrams never cross a sentence
//! boundary, and each keyword phrase is treated as its own sentence. The
//! per-article output is deduplicated to presence, which is what the
//! chi-square scorer consumes.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::ArticleRecord;

/// What a text feature is: an n-gram or a whole journal name.
///
/// The variant order doubles as the deterministic tie-break order when two
/// candidate features share a token and a chi-square score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Unigram,
    Bigram,
    Trigram,
    JournalName,
}

impl TermKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Unigram => "unigram",
            TermKind::Bigram => "bigram",
            TermKind::Trigram => "trigram",
            TermKind::JournalName => "journal_name",
        }
    }
}

impl fmt::Display for TermKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A term as carried through selection and matrices: kind plus token text.
pub type Term = (TermKind, String);

fn flush_word(words: &mut Vec<String>, run: &mut String, has_alnum: &mut bool) {
    if *has_alnum {
        words.push(std::mem::take(run));
    } else {
        run.clear();
    }
    *has_alnum = false;
}

fn words_of(sentence: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut run = String::new();
    let mut has_alnum = false;
    for c in sentence.chars() {
        if c.is_alphanumeric() || c == '-' {
            has_alnum |= c.is_alphanumeric();
            run.push(c);
        } else if !run.is_empty() {
            flush_word(&mut words, &mut run, &mut has_alnum);
        }
    }
    if !run.is_empty() {
        flush_word(&mut words, &mut run, &mut has_alnum);
    }
    words
}

/// Lowercases, splits into sentences, and splits each sentence into words.
/// Sentences without any word are dropped.
pub fn sentence_words(text: &str) -> Vec<Vec<String>> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut push = |buf: &mut String| {
        let words = words_of(buf);
        if !words.is_empty() {
            sentences.push(words);
        }
        buf.clear();
    };
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j], '.' | '!' | '?') {
                j += 1;
            }
            if j >= chars.len() || chars[j].is_whitespace() {
                push(&mut current);
                i = j;
                continue;
            }
            // Interior punctuation ("3.5", "e.g.x") separates words but
            // does not end the sentence.
            current.push(c);
        } else {
            current.push(c);
        }
        i += 1;
    }
    push(&mut current);
    sentences
}

fn ngrams_into(out: &mut BTreeSet<Term>, sentences: &[Vec<String>]) {
    for sentence in sentences {
        for w in sentence {
            out.insert((TermKind::Unigram, w.clone()));
        }
        for pair in sentence.windows(2) {
            out.insert((TermKind::Bigram, format!("{} {}", pair[0], pair[1])));
        }
        for triple in sentence.windows(3) {
            out.insert((
                TermKind::Trigram,
                format!("{} {} {}", triple[0], triple[1], triple[2]),
            ));
        }
    }
}

/// Extracts the deduplicated set of 1/2/3-grams from a title, an abstract
/// and a keyword list, with each keyword phrase as its own sentence.
pub fn tokenize(title: &str, abstract_text: &str, keywords: &[String]) -> BTreeSet<Term> {
    let mut out = BTreeSet::new();
    ngrams_into(&mut out, &sentence_words(title));
    ngrams_into(&mut out, &sentence_words(abstract_text));
    for kw in keywords {
        ngrams_into(&mut out, &sentence_words(kw));
    }
    out
}

/// Full candidate term set for one article: its n-grams plus its journal
/// name (lowercased) as a single factor-style term.
pub fn article_terms(article: &ArticleRecord) -> BTreeSet<Term> {
    let mut out = tokenize(&article.title, &article.abstract_text, &article.keywords);
    let journal = article.journal.trim().to_lowercase();
    if !journal.is_empty() {
        out.insert((TermKind::JournalName, journal));
    }
    out
}

/// Dictionary-free syllable heuristic: count `aeiouy` vowel groups, drop a
/// trailing silent "e" unless that would empty the word, floor at one.
pub fn syllables(word: &str) -> usize {
    let mut count = 0;
    let mut in_group = false;
    for c in word.chars() {
        let vowel = matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
        if vowel && !in_group {
            count += 1;
        }
        in_group = vowel;
    }
    if word.ends_with('e') && count > 1 {
        count -= 1;
    }
    count.max(1)
}

/// Flesch-Kincaid grade level: 0.39·(words/sentences) + 11.8·(syllables/words)
/// − 15.59. Returns `None` when the text has no words; callers impute that
/// case the same way as missing page counts.
pub fn flesch_kincaid(text: &str) -> Option<f64> {
    let sentences = sentence_words(text);
    let n_words: usize = sentences.iter().map(Vec::len).sum();
    if n_words == 0 {
        return None;
    }
    let n_syllables: usize = sentences
        .iter()
        .flat_map(|s| s.iter())
        .map(|w| syllables(w))
        .sum();
    Some(
        0.39 * n_words as f64 / sentences.len() as f64
            + 11.8 * n_syllables as f64 / n_words as f64
            - 15.59,
    )
}
