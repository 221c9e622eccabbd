//! Corpus BLEU, stem-level BLEU, and vocabulary coverage.

use std::collections::HashMap;
use std::ops::AddAssign;

use crate::error::{Error, Result};
use crate::text::{StemmerRules, Vocabulary};

pub const MAX_ORDER: usize = 4;
/// Stand-in for a zero match count at orders above one.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Sufficient statistics for corpus BLEU. Additive across sentences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts<S: AsRef<str>>(toks: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    m
}

impl BleuStats {
    pub fn from_sentence<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], reference: &[T]) -> Self {
        let mut s = BleuStats {
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let h = ngram_counts(hyp, n);
            let r = ngram_counts(reference, n);
            s.totals[n - 1] = h.values().sum();
            s.matches[n - 1] = h
                .iter()
                .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
                .sum();
        }
        s
    }

    /// Clipped precision per order; `None` where the hypothesis has no n-grams.
    pub fn precisions(&self) -> [Option<f64>; MAX_ORDER] {
        std::array::from_fn(|n| (self.totals[n] > 0).then(|| self.matches[n] as f64 / self.totals[n] as f64))
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len >= self.ref_len {
            1.0
        } else if self.hyp_len == 0 {
            0.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        }
    }

    /// BLEU over orders up to the longest one the hypotheses contain.
    pub fn score(&self) -> f64 {
        if self.matches.iter().all(|&m| m == 0) {
            return 0.0;
        }
        let mut log_sum = 0.0;
        let mut order = 0;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                break;
            }
            order = n + 1;
            let total = self.totals[n] as f64;
            let p = if self.matches[n] == 0 {
                SMOOTHING_EPSILON / total
            } else {
                self.matches[n] as f64 / total
            };
            log_sum += p.ln();
        }
        self.brevity_penalty() * (log_sum / order as f64).exp()
    }
}

impl AddAssign for BleuStats {
    fn add_assign(&mut self, o: Self) {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
    }
}

pub fn bleu_stats<S: AsRef<str>, T: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<T>]) -> Result<BleuStats> {
    if hyps.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if hyps.len() != refs.len() {
        return Err(Error::LengthMismatch(format!(
            "{} hypotheses but {} references",
            hyps.len(),
            refs.len()
        )));
    }
    let mut total = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        total += BleuStats::from_sentence(h, r);
    }
    Ok(total)
}

/// Single-reference corpus BLEU-4 in `[0, 1]`.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<T>]) -> Result<f64> {
    Ok(bleu_stats(hyps, refs)?.score())
}

fn stems_of<S: AsRef<str>>(corpus: &[Vec<S>], rules: &StemmerRules) -> Vec<Vec<String>> {
    corpus
        .iter()
        .map(|s| s.iter().map(|w| rules.stem_word(w.as_ref()).stem).collect())
        .collect()
}

pub fn stem_bleu_stats<S: AsRef<str>, T: AsRef<str>>(
    hyps: &[Vec<S>],
    refs: &[Vec<T>],
    rules: &StemmerRules,
) -> Result<BleuStats> {
    bleu_stats(&stems_of(hyps, rules), &stems_of(refs, rules))
}

/// BLEU after reducing both sides to stems.
pub fn stem_bleu<S: AsRef<str>, T: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<T>], rules: &StemmerRules) -> Result<f64> {
    Ok(stem_bleu_stats(hyps, refs, rules)?.score())
}

/// Fraction of running tokens found in `vocab`.
pub fn coverage<S: AsRef<str>>(corpus: &[Vec<S>], vocab: &Vocabulary) -> Result<f64> {
    let total: usize = corpus.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let hits = corpus
        .iter()
        .flatten()
        .filter(|t| vocab.contains(t.as_ref()))
        .count();
    Ok(hits as f64 / total as f64)
}
