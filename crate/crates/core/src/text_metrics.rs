//! Text-similarity kernels for OCR and free-form scoring.
//!
//! Tokenization is deliberately simple and pinned: whitespace split,
//! lowercase, leading/trailing punctuation stripped per token. Tokens
//! that become empty are dropped, so a `TokenSeq` never contains empty
//! tokens.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextMetricError {
    #[error("reference must contain at least one token")]
    EmptyReference,
}

/// Normalized token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    /// Normalizes raw text: lowercase, split on whitespace, strip
    /// leading/trailing punctuation from each token.
    pub fn normalize(text: &str) -> Self {
        let tokens = text
            .split_whitespace()
            .filter_map(|t| {
                let t = t
                    .trim_matches(|c: char| c.is_ascii_punctuation())
                    .to_lowercase();
                (!t.is_empty()).then_some(t)
            })
            .collect();
        Self { tokens }
    }

    /// Builds a sequence from pre-split tokens; empty tokens are dropped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            tokens: tokens
                .into_iter()
                .map(Into::into)
                .filter(|t: &String| !t.is_empty())
                .collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Token-level Levenshtein distance with unit insert/delete/substitute
/// costs.
pub fn edit_distance(a: &TokenSeq, b: &TokenSeq) -> usize {
    let (a, b) = (a.tokens(), b.tokens());
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    // Two-row DP.
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ta != tb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Word error rate: edit distance divided by reference length.
///
/// May exceed 1; clamping is the reward layer's job.
pub fn word_error_rate(hypothesis: &TokenSeq, reference: &TokenSeq) -> Result<f64, TextMetricError> {
    if reference.is_empty() {
        return Err(TextMetricError::EmptyReference);
    }
    Ok(edit_distance(hypothesis, reference) as f64 / reference.len() as f64)
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Clipped n-gram overlap F1 (ROUGE-N). Zero when either side has no
/// n-grams.
pub fn rouge_n(hypothesis: &TokenSeq, reference: &TokenSeq, n: usize) -> f64 {
    assert!(n >= 1, "n-gram order must be at least 1");
    let hyp = hypothesis.tokens();
    let reff = reference.tokens();
    if hyp.len() < n || reff.len() < n {
        return 0.0;
    }
    let hyp_grams: Vec<&[String]> = hyp.windows(n).collect();
    let mut ref_grams: Vec<(&[String], usize)> = Vec::new();
    'outer: for g in reff.windows(n) {
        for entry in &mut ref_grams {
            if entry.0 == g {
                entry.1 += 1;
                continue 'outer;
            }
        }
        ref_grams.push((g, 1));
    }
    let mut overlap = 0usize;
    for (g, avail) in &mut ref_grams {
        let in_hyp = hyp_grams.iter().filter(|h| **h == *g).count();
        overlap += in_hyp.min(*avail);
    }
    let precision = overlap as f64 / hyp_grams.len() as f64;
    let recall = overlap as f64 / (reff.len() - n + 1) as f64;
    f1(precision, recall)
}

/// Length of the longest common subsequence.
pub fn lcs_length(a: &TokenSeq, b: &TokenSeq) -> usize {
    let (a, b) = (a.tokens(), b.tokens());
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ta in a {
        for (j, tb) in b.iter().enumerate() {
            cur[j + 1] = if ta == tb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F1 (ROUGE-L). Zero on empty input.
pub fn rouge_l(hypothesis: &TokenSeq, reference: &TokenSeq) -> f64 {
    if hypothesis.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(hypothesis, reference) as f64;
    let precision = lcs / hypothesis.len() as f64;
    let recall = lcs / reference.len() as f64;
    f1(precision, recall)
}
