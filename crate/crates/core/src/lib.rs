//! Prediction of peer-review quality scores for journal articles.
//!
//! The library covers the full pipeline used by the accompanying CLI:
//!
//! * [`corpus`] — record schema, ingestion, cleaning, inclusion filtering,
//!   duplicate handling, reviewer-agreement and journal-homogeneity
//!   statistics, and a synthetic corpus generator with planted signal.
//! * [`features`] — field-normalised citation scores, readability, page
//!   imputation, sentence-bounded n-gram extraction, chi-square feature
//!   selection and feature-matrix assembly.
//! * [`learners`] — decision-tree ensembles (random forest, gradient
//!   boosting with an optional regularised variant), an ordinal wrapper
//!   built from cumulative binary tasks, and a modal baseline.
//! * [`strategies`] — train/test evaluation, probability-ranked triage and
//!   batch active learning, plus cross-year transfer.
//! * [`evaluation`] — accuracy, funding-weight power, institutional and
//!   subgroup shift analyses, rank shifts, correlations and accuracy
//!   blending.
//!
//! All randomised behaviour is seeded explicitly; given equal inputs and
//! seeds, every function returns identical results regardless of thread
//! count.

pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod learners;
pub mod strategies;

pub use error::{Error, Result};

/// Stable 64-bit FNV-1a hash, used to derive per-group and per-worker seeds
/// that do not depend on iteration order or on `std`'s unstable hasher.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Mixes a master seed with a stream index into an independent child seed.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    // SplitMix64 finaliser over the combined value; avalanche is good
    // enough to decorrelate neighbouring streams.
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
