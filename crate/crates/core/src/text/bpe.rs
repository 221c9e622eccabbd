//! Byte-pair encoding learned over stems, and the matching suffix adjustment.
//!
//! Merges never cross stem boundaries. A stem split into `n` fragments is
//! written as `n - 1` fragments carrying the `@@` continuation marker
//! followed by the final fragment; the suffix sequence receives `n - 1`
//! extra `N` tags placed before that stem's own suffix, keeping both
//! sequences the same length.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::factor::FactoredTokens;
use super::stemmer::NO_SUFFIX;
use crate::error::{Error, Result};

pub const CONTINUATION_MARKER: &str = "@@";

/// Ordered merge rules.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>) -> Self {
        let ranks = merges
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        BpeModel { merges, ranks }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// Applies merges, lowest rank first, until no adjacent pair has a rule.
    pub fn apply_merges(&self, mut symbols: Vec<String>) -> Vec<String> {
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())).copied())
                .min();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            let mut out = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && &symbols[i] == left && &symbols[i + 1] == right {
                    out.push(format!("{left}{right}"));
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut symbols[i]));
                    i += 1;
                }
            }
            symbols = out;
        }
        symbols
    }

    /// Splits a stem into fragments (without markers). Characters never seen
    /// in training simply stay as single-character fragments.
    pub fn segment(&self, stem: &str) -> Vec<String> {
        self.apply_merges(stem.chars().map(String::from).collect())
    }

    /// Fragments with the continuation marker on all but the last.
    pub fn encode_stem(&self, stem: &str) -> Vec<String> {
        let mut frags = self.segment(stem);
        let n = frags.len();
        for f in frags.iter_mut().take(n.saturating_sub(1)) {
            f.push_str(CONTINUATION_MARKER);
        }
        frags
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("version 1\n");
        for (l, r) in &self.merges {
            let _ = writeln!(s, "{l} {r}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, "version 1")) => {}
            _ => return Err(Error::parse("bpe model", 1, "expected header \"version 1\"")),
        }
        let mut merges = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    merges.push((l.to_string(), r.to_string()))
                }
                _ => return Err(Error::parse("bpe model", i + 1, "expected \"left right\"")),
            }
        }
        Ok(Self::from_merges(merges))
    }
}

/// Greedy most-frequent-pair merging over the stems of `corpus`.
///
/// Ties go to the lexicographically smallest pair. Stops early when no
/// adjacent pair remains.
pub fn learn_bpe<S: AsRef<str>>(corpus: &[Vec<S>], num_merges: usize) -> BpeModel {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for sent in corpus {
        for stem in sent {
            *freq.entry(stem.as_ref()).or_insert(0) += 1;
        }
    }
    let mut words: Vec<(Vec<String>, u64)> = freq
        .into_iter()
        .map(|(w, c)| (w.chars().map(String::from).collect(), c))
        .collect();
    words.sort();

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let mut counts: HashMap<(&str, &str), u64> = HashMap::new();
        for (syms, c) in &words {
            for w in syms.windows(2) {
                *counts.entry((w[0].as_str(), w[1].as_str())).or_insert(0) += c;
            }
        }
        let best = counts
            .into_iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)));
        let Some(((l, r), _)) = best else { break };
        let pair = (l.to_string(), r.to_string());
        let joined = format!("{}{}", pair.0, pair.1);
        for (syms, _) in words.iter_mut() {
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
                    out.push(joined.clone());
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut syms[i]));
                    i += 1;
                }
            }
            *syms = out;
        }
        merges.push(pair);
    }
    BpeModel::from_merges(merges)
}

/// Segments every stem and inserts `n - 1` `N` tags before its suffix.
pub fn apply_bpe_with_suffix_adjust(f: &FactoredTokens, model: &BpeModel) -> Result<FactoredTokens> {
    let mut stems = Vec::with_capacity(f.len());
    let mut suffixes = Vec::with_capacity(f.len());
    for (stem, suffix) in f.iter() {
        let frags = model.encode_stem(stem);
        let n = frags.len();
        stems.extend(frags);
        suffixes.extend(std::iter::repeat_n(NO_SUFFIX.to_string(), n.saturating_sub(1)));
        suffixes.push(suffix.to_string());
    }
    FactoredTokens::new(stems, suffixes)
}

/// Joins continuation-marked fragments back into whole stems.
pub fn undo_bpe<S: AsRef<str>>(substems: &[S]) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for s in substems {
        let s = s.as_ref();
        match s.strip_suffix(CONTINUATION_MARKER) {
            Some(head) => cur.push_str(head),
            None => {
                cur.push_str(s);
                out.push(std::mem::take(&mut cur));
            }
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}
