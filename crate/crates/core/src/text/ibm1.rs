//! IBM Model 1 translation table and sentence-pair scoring.
//!
//! `t(target | source)` is estimated by EM over a parallel corpus. Every
//! source sentence is extended with a NULL token.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const NULL_TOKEN: &str = "<null>";

/// Length-normalized log-probability below which a pair is dropped.
pub const DEFAULT_IBM1_THRESHOLD: f64 = -7.0;

/// Floor applied to per-token likelihoods when scoring unseen pairs.
const SCORE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Ibm1Model {
    src_index: HashMap<String, usize>,
    tgt_index: HashMap<String, usize>,
    /// Per source id: co-occurring target ids (sorted) and their probabilities.
    rows: Vec<Vec<(usize, f64)>>,
    /// Probability for pairs not stored in `rows`.
    default_prob: f64,
}

/// Corpus log-likelihood before each EM iteration, plus the final value.
#[derive(Debug, Clone, Default)]
pub struct Ibm1Trace {
    pub log_likelihoods: Vec<f64>,
}

type Pair = (Vec<String>, Vec<String>);

impl Ibm1Model {
    /// Uniform table over the target vocabulary of `corpus`.
    pub fn uniform(corpus: &[Pair]) -> Self {
        let mut src_index = HashMap::new();
        src_index.insert(NULL_TOKEN.to_string(), 0);
        let mut tgt_index = HashMap::new();
        for (s, t) in corpus {
            for w in s {
                let n = src_index.len();
                src_index.entry(w.clone()).or_insert(n);
            }
            for w in t {
                let n = tgt_index.len();
                tgt_index.entry(w.clone()).or_insert(n);
            }
        }
        let uniform = 1.0 / tgt_index.len().max(1) as f64;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); src_index.len()];
        for (s, t) in corpus {
            let tids: Vec<usize> = t.iter().map(|w| tgt_index[w]).collect();
            for sid in std::iter::once(0).chain(s.iter().map(|w| src_index[w])) {
                rows[sid].extend(tids.iter().map(|&f| (f, uniform)));
            }
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|(f, _)| *f);
            row.dedup_by_key(|(f, _)| *f);
        }
        Ibm1Model {
            src_index,
            tgt_index,
            rows,
            default_prob: uniform,
        }
    }

    fn lookup(&self, sid: usize, fid: usize) -> f64 {
        let row = &self.rows[sid];
        match row.binary_search_by_key(&fid, |(f, _)| *f) {
            Ok(i) => row[i].1,
            Err(_) => self.default_prob,
        }
    }

    /// `t(target | source)`; zero for words never seen in training.
    pub fn prob(&self, target: &str, source: &str) -> f64 {
        match (self.src_index.get(source), self.tgt_index.get(target)) {
            (Some(&s), Some(&f)) => self.lookup(s, f),
            _ => 0.0,
        }
    }

    pub fn source_vocab_size(&self) -> usize {
        self.src_index.len()
    }

    pub fn target_vocab_size(&self) -> usize {
        self.tgt_index.len()
    }

    /// Sum of the stored row for `source` (1 after at least one EM step).
    pub fn row_sum(&self, source: &str) -> Option<f64> {
        self.src_index
            .get(source)
            .map(|&s| self.rows[s].iter().map(|(_, p)| p).sum())
    }

    pub fn source_tokens(&self) -> impl Iterator<Item = &str> {
        self.src_index.keys().map(String::as_str)
    }

    /// Length-normalized log-probability of `target` given `source`.
    ///
    /// Empty targets score negative infinity.
    pub fn score(&self, source: &[String], target: &[String]) -> f64 {
        if target.is_empty() {
            return f64::NEG_INFINITY;
        }
        let sids: Vec<usize> = std::iter::once(0)
            .chain(source.iter().filter_map(|w| self.src_index.get(w).copied()))
            .collect();
        let denom = (source.len() + 1) as f64;
        let total: f64 = target
            .iter()
            .map(|f| {
                let p = match self.tgt_index.get(f) {
                    Some(&fid) => sids.iter().map(|&s| self.lookup(s, fid)).sum::<f64>(),
                    None => 0.0,
                };
                (p / denom).max(SCORE_FLOOR).ln()
            })
            .sum();
        total / target.len() as f64
    }

    fn encode(&self, corpus: &[Pair]) -> Vec<(Vec<usize>, Vec<usize>)> {
        corpus
            .iter()
            .map(|(s, t)| {
                let sids = std::iter::once(0)
                    .chain(s.iter().map(|w| self.src_index[w]))
                    .collect();
                let tids = t.iter().map(|w| self.tgt_index[w]).collect();
                (sids, tids)
            })
            .collect()
    }

    fn log_likelihood(&self, data: &[(Vec<usize>, Vec<usize>)]) -> f64 {
        let mut ll = 0.0;
        for (sids, tids) in data {
            let denom = sids.len() as f64;
            for &f in tids {
                let p: f64 = sids.iter().map(|&s| self.lookup(s, f)).sum();
                ll += (p / denom).ln();
            }
        }
        ll
    }

    fn em_step(&mut self, data: &[(Vec<usize>, Vec<usize>)]) {
        let mut counts: Vec<Vec<f64>> = self.rows.iter().map(|r| vec![0.0; r.len()]).collect();
        for (sids, tids) in data {
            for &f in tids {
                let z: f64 = sids.iter().map(|&s| self.lookup(s, f)).sum();
                if z == 0.0 {
                    continue;
                }
                for &s in sids {
                    let row = &self.rows[s];
                    if let Ok(i) = row.binary_search_by_key(&f, |(t, _)| *t) {
                        counts[s][i] += row[i].1 / z;
                    }
                }
            }
        }
        for (row, c) in self.rows.iter_mut().zip(counts) {
            let total: f64 = c.iter().sum();
            if total > 0.0 {
                for ((_, p), ci) in row.iter_mut().zip(c) {
                    *p = ci / total;
                }
            }
        }
        self.default_prob = 0.0;
    }
}

/// EM training; see [`ibm1_train_traced`] for the likelihood trace.
pub fn ibm1_train(corpus: &[Pair], iters: usize) -> Result<Ibm1Model> {
    ibm1_train_traced(corpus, iters).map(|(m, _)| m)
}

pub fn ibm1_train_traced(corpus: &[Pair], iters: usize) -> Result<(Ibm1Model, Ibm1Trace)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if iters == 0 {
        return Err(Error::InvalidArgument("IBM Model 1 needs at least one iteration".into()));
    }
    let mut model = Ibm1Model::uniform(corpus);
    let data = model.encode(corpus);
    let mut trace = Ibm1Trace::default();
    for _ in 0..iters {
        trace.log_likelihoods.push(model.log_likelihood(&data));
        model.em_step(&data);
    }
    trace.log_likelihoods.push(model.log_likelihood(&data));
    Ok((model, trace))
}

/// Keeps pairs whose length-normalized log-probability reaches `threshold`.
pub fn ibm1_score_and_filter(corpus: &[Pair], model: &Ibm1Model, threshold: f64) -> Vec<Pair> {
    corpus
        .iter()
        .filter(|(s, t)| model.score(s, t) >= threshold)
        .cloned()
        .collect()
}
