//! Text-generation metrics: BLEU-4, ROUGE-L, a simplified METEOR, and
//! exact-match accuracy.
//!
//! All n-gram metrics operate on token lists produced by
//! [`tokenize_for_metrics`]: lowercased, split on whitespace, with
//! punctuation runs separated from word runs (both steps configurable).
//! Scores are percentages in `[0, 100]`; [`accuracy`] returns a fraction in
//! `[0, 1]`.
//!
//! METEOR here is the exact+stem variant: unigrams align by string equality
//! first, then by English (Snowball) stem equality, greedily left-to-right.
//! Synonym and paraphrase tables of full METEOR need external lexical
//! databases and are deliberately out of scope.

use std::collections::HashMap;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tokenization knobs for metric computation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    /// Lowercase before splitting.
    pub lowercase: bool,
    /// Split punctuation runs off word runs ("mat!" -> "mat", "!").
    pub split_punctuation: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            lowercase: true,
            split_punctuation: true,
        }
    }
}

/// Split text into metric tokens per the config.
pub fn tokenize_for_metrics(text: &str, config: &MetricConfig) -> Vec<String> {
    let lowered: String = if config.lowercase {
        text.chars().flat_map(char::to_lowercase).collect()
    } else {
        text.to_string()
    };
    if !config.split_punctuation {
        return lowered.split_whitespace().map(String::from).collect();
    }
    #[derive(PartialEq, Clone, Copy)]
    enum Class {
        Word,
        Punct,
    }
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut class = Class::Word;
    for ch in lowered.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            continue;
        }
        let ch_class = if ch.is_alphanumeric() {
            Class::Word
        } else {
            Class::Punct
        };
        if !current.is_empty() && ch_class != class {
            tokens.push(std::mem::take(&mut current));
        }
        class = ch_class;
        current.push(ch);
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Numerator floor that keeps the geometric mean defined when a higher-order
/// precision has zero matches.
pub const BLEU_EPSILON: f64 = 1e-9;

/// Corpus-style BLEU-4 for a single candidate/reference pair, 0-100.
///
/// Modified n-gram precisions for n = 1..4 are combined as a geometric mean
/// and scaled by the brevity penalty. Zero-match numerators are floored at
/// [`BLEU_EPSILON`] so short clinical answers score near zero instead of
/// being undefined. An empty candidate or reference scores 0.
pub fn bleu4(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand_grams = ngram_counts(candidate, n);
        let ref_grams = ngram_counts(reference, n);
        let total: usize = cand_grams.values().sum();
        let matched: usize = cand_grams
            .iter()
            .map(|(gram, &count)| count.min(*ref_grams.get(gram).unwrap_or(&0)))
            .sum();
        let precision = if total == 0 {
            // Candidate shorter than n: treat the empty ratio as the floor.
            BLEU_EPSILON
        } else {
            (matched as f64).max(BLEU_EPSILON) / total as f64
        };
        log_sum += precision.ln();
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let brevity = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    100.0 * brevity * (log_sum / 4.0).exp()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            row[j + 1] = if x == y {
                prev[j] + 1
            } else {
                row[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// ROUGE-L F1 (longest common subsequence, beta = 1), 0-100.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(candidate, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / candidate.len() as f64;
    let r = lcs / reference.len() as f64;
    100.0 * 2.0 * p * r / (p + r)
}

/// Greedy unigram alignment: exact matches first, then stem matches, each
/// pass left-to-right taking the first free reference token.
fn meteor_alignment(candidate: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut cand_used = vec![false; candidate.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    for (i, ct) in candidate.iter().enumerate() {
        for (j, rt) in reference.iter().enumerate() {
            if !ref_used[j] && ct == rt {
                cand_used[i] = true;
                ref_used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    let stemmer = Stemmer::create(Algorithm::English);
    for (i, ct) in candidate.iter().enumerate() {
        if cand_used[i] {
            continue;
        }
        let cstem = stemmer.stem(ct).into_owned();
        for (j, rt) in reference.iter().enumerate() {
            if !ref_used[j] && stemmer.stem(rt) == cstem {
                cand_used[i] = true;
                ref_used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

fn chunk_count(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(i, j) in pairs {
        let contiguous = prev.map_or(false, |(pi, pj)| i == pi + 1 && j == pj + 1);
        if !contiguous {
            chunks += 1;
        }
        prev = Some((i, j));
    }
    chunks
}

/// Score from an alignment's match and chunk counts (shared with the
/// exhaustive oracle in the test suite).
pub fn meteor_from_alignment(
    matches: usize,
    chunks: usize,
    cand_len: usize,
    ref_len: usize,
) -> f64 {
    if matches == 0 || cand_len == 0 || ref_len == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let p = m / cand_len as f64;
    let r = m / ref_len as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    100.0 * f_mean * (1.0 - penalty)
}

/// Simplified METEOR (exact + stem matching, recall weight 9,
/// fragmentation penalty `0.5 * (chunks/m)^3`), 0-100.
pub fn meteor_simplified(candidate: &[String], reference: &[String]) -> f64 {
    let pairs = meteor_alignment(candidate, reference);
    meteor_from_alignment(
        pairs.len(),
        chunk_count(&pairs),
        candidate.len(),
        reference.len(),
    )
}

/// Fraction of candidates exactly equal to their reference after stripping
/// trailing whitespace.
pub fn accuracy(candidates: &[String], references: &[String]) -> Result<f64> {
    if candidates.len() != references.len() {
        return Err(Error::LengthMismatch {
            left: candidates.len(),
            right: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(Error::EmptyInput("accuracy pairs".into()));
    }
    let hits = candidates
        .iter()
        .zip(references)
        .filter(|(c, r)| c.trim_end() == r.trim_end())
        .count();
    Ok(hits as f64 / candidates.len() as f64)
}
