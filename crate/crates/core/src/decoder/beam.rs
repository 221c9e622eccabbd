use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{EncoderState, Model};
use crate::text::{BOS, EOS, NO_SUFFIX_ID};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub beam_size: usize,
    /// Maximum output length in tokens, `</s>` included.
    pub max_len: usize,
    pub length_norm_alpha: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam_size: 4,
            max_len: 60,
            length_norm_alpha: 0.6,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 || self.max_len == 0 {
            return Err(Error::InvalidArgument("beam size and max length must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.length_norm_alpha) {
            return Err(Error::InvalidArgument(format!(
                "length normalization exponent {} not in [0, 1]",
                self.length_norm_alpha
            )));
        }
        Ok(())
    }
}

/// A partial or complete output. Finished hypotheses end with `</s>` / `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    substems: Vec<usize>,
    suffixes: Vec<usize>,
    log_score: f64,
    state: Vec<f64>,
    finished: bool,
}

impl Hypothesis {
    fn initial(enc: &EncoderState) -> Self {
        Hypothesis {
            substems: Vec::new(),
            suffixes: Vec::new(),
            log_score: 0.0,
            state: enc.decoder_init().to_vec(),
            finished: false,
        }
    }

    pub fn substems(&self) -> &[usize] {
        &self.substems
    }

    pub fn suffixes(&self) -> &[usize] {
        &self.suffixes
    }

    /// Sum of stem and suffix log-probabilities.
    pub fn log_score(&self) -> f64 {
        self.log_score
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn len(&self) -> usize {
        self.substems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.substems.is_empty()
    }

    pub fn normalized_score(&self, alpha: f64) -> f64 {
        self.log_score / (self.len().max(1) as f64).powf(alpha)
    }

    fn last_stem(&self) -> usize {
        self.substems.last().copied().unwrap_or(BOS)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    hyp: usize,
    stem: usize,
    suffix: usize,
    stem_lp: f64,
    suffix_lp: f64,
}

/// Best first; ties go to the lower hypothesis index, then stem id, then suffix id.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.hyp.cmp(&b.hyp))
        .then(a.stem.cmp(&b.stem))
        .then(a.suffix.cmp(&b.suffix))
}

/// Keeps the `cap` best candidates seen so far, sorted.
struct TopK {
    cap: usize,
    items: Vec<Candidate>,
}

impl TopK {
    fn new(cap: usize) -> Self {
        TopK {
            cap,
            items: Vec::with_capacity(cap + 1),
        }
    }

    /// Score a candidate must strictly beat (or tie and win on ids) to enter.
    fn floor(&self) -> f64 {
        if self.items.len() < self.cap {
            f64::NEG_INFINITY
        } else {
            self.items[self.cap - 1].score
        }
    }

    fn push(&mut self, c: Candidate) {
        let pos = self.items.partition_point(|x| rank(x, &c) == Ordering::Less);
        if pos >= self.cap {
            return;
        }
        self.items.insert(pos, c);
        self.items.truncate(self.cap);
    }
}

/// `(id, ln p)` sorted by probability, best first, ties to the lower id.
fn ranked(dist: &[f64], skip: &[usize], limit: usize) -> Vec<(usize, f64)> {
    let mut ids: Vec<usize> = (0..dist.len()).filter(|i| !skip.contains(i)).collect();
    ids.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
    ids.truncate(limit);
    ids.into_iter().map(|i| (i, dist[i].ln())).collect()
}

fn expand(
    beam: &[Hypothesis],
    enc: &EncoderState,
    model: &Model,
    width: usize,
    force_eos: bool,
) -> Result<Vec<Hypothesis>> {
    let step = beam.first().map_or(0, Hypothesis::len);
    let mut queue = TopK::new(width);
    let mut states = Vec::with_capacity(beam.len());
    for (h, hyp) in beam.iter().enumerate() {
        debug_assert!(!hyp.finished && hyp.len() == step);
        let (dist, st) = model.decode_step_stem(hyp.last_stem(), &hyp.state, enc, step)?;
        let stems = if force_eos {
            vec![(EOS, dist.data()[EOS].ln())]
        } else {
            ranked(dist.data(), &[BOS], width)
        };
        for (stem, stem_lp) in stems {
            let base = hyp.log_score + stem_lp;
            // Suffix log-probabilities are at most 0, so later stems cannot enter either.
            if base < queue.floor() {
                break;
            }
            if stem == EOS {
                queue.push(Candidate {
                    score: base,
                    hyp: h,
                    stem,
                    suffix: NO_SUFFIX_ID,
                    stem_lp,
                    suffix_lp: 0.0,
                });
                continue;
            }
            let pred = model.decode_step_suffix(&st, stem, step)?;
            for (suffix, suffix_lp) in ranked(pred.dist.data(), &[BOS, EOS], width) {
                let score = base + suffix_lp;
                if score < queue.floor() {
                    break;
                }
                queue.push(Candidate {
                    score,
                    hyp: h,
                    stem,
                    suffix,
                    stem_lp,
                    suffix_lp,
                });
            }
        }
        states.push(st);
    }
    Ok(queue
        .items
        .into_iter()
        .map(|c| {
            let parent = &beam[c.hyp];
            let mut substems = parent.substems.clone();
            let mut suffixes = parent.suffixes.clone();
            substems.push(c.stem);
            suffixes.push(c.suffix);
            Hypothesis {
                substems,
                suffixes,
                log_score: parent.log_score + c.stem_lp + c.suffix_lp,
                state: states[c.hyp].state().to_vec(),
                finished: c.stem == EOS,
            }
        })
        .collect())
}

/// One search step: every hypothesis proposes its top-n stems, every stem its
/// top-n suffixes, and the n best complete pairs overall survive.
pub fn expand_step(
    beam: &[Hypothesis],
    enc: &EncoderState,
    model: &Model,
    config: &BeamConfig,
) -> Result<Vec<Hypothesis>> {
    config.validate()?;
    if beam.is_empty() || beam.iter().any(|h| h.finished) {
        return Err(Error::InvalidArgument("beam must be non-empty and unfinished".into()));
    }
    if beam.iter().any(|h| h.len() != beam[0].len()) {
        return Err(Error::InvalidArgument("beam hypotheses differ in length".into()));
    }
    expand(beam, enc, model, config.beam_size, false)
}

/// Starting beam for `enc`: one empty hypothesis.
pub fn initial_beam(enc: &EncoderState) -> Vec<Hypothesis> {
    vec![Hypothesis::initial(enc)]
}

/// n-best outputs for `src`, sorted by length-normalized score.
///
/// Each finished hypothesis permanently takes one of the `n` slots, so the
/// live beam narrows as outputs complete. `</s>` is forced at `max_len`.
pub fn beam_search(src: &[usize], model: &Model, config: &BeamConfig) -> Result<Vec<Hypothesis>> {
    config.validate()?;
    let enc = model.encode(src)?;
    let mut active = initial_beam(&enc);
    let mut finished: Vec<Hypothesis> = Vec::new();
    for t in 0..config.max_len {
        let width = config.beam_size - finished.len();
        if width == 0 || active.is_empty() {
            break;
        }
        let next = expand(&active, &enc, model, width, t + 1 == config.max_len)?;
        active.clear();
        for h in next {
            if h.finished {
                finished.push(h);
            } else {
                active.push(h);
            }
        }
    }
    let alpha = config.length_norm_alpha;
    finished.sort_by(|a, b| b.normalized_score(alpha).total_cmp(&a.normalized_score(alpha)));
    Ok(finished)
}

/// Picks the most probable stem, then the most probable suffix for it, at every step.
pub fn greedy_decode(src: &[usize], model: &Model, max_len: usize) -> Result<Hypothesis> {
    let enc = model.encode(src)?;
    let mut hyp = Hypothesis::initial(&enc);
    for t in 0..max_len.max(1) {
        let (dist, st) = model.decode_step_stem(hyp.last_stem(), &hyp.state, &enc, t)?;
        let stem = if t + 1 >= max_len {
            EOS
        } else {
            ranked(dist.data(), &[BOS], 1)[0].0
        };
        let stem_lp = dist.data()[stem].ln();
        let (suffix, suffix_lp) = if stem == EOS {
            (NO_SUFFIX_ID, 0.0)
        } else {
            let pred = model.decode_step_suffix(&st, stem, t)?;
            ranked(pred.dist.data(), &[BOS, EOS], 1)[0]
        };
        hyp.substems.push(stem);
        hyp.suffixes.push(suffix);
        hyp.log_score = hyp.log_score + stem_lp + suffix_lp;
        hyp.state = st.state().to_vec();
        if stem == EOS {
            hyp.finished = true;
            break;
        }
    }
    Ok(hyp)
}

/// Log-probability of a given output under teacher forcing, scored like the search.
pub fn rescore(src: &[usize], model: &Model, substems: &[usize], suffixes: &[usize]) -> Result<f64> {
    if substems.len() != suffixes.len() {
        return Err(Error::LengthMismatch(format!(
            "{} stems but {} suffixes",
            substems.len(),
            suffixes.len()
        )));
    }
    let enc = model.encode(src)?;
    let mut state = enc.decoder_init().to_vec();
    let mut prev = BOS;
    let mut score = 0.0;
    for (t, (&stem, &suffix)) in substems.iter().zip(suffixes).enumerate() {
        let (dist, st) = model.decode_step_stem(prev, &state, &enc, t)?;
        let stem_lp = dist.data().get(stem).ok_or(Error::IndexOutOfRange {
            index: stem,
            size: dist.len(),
        })?;
        let suffix_lp = if stem == EOS {
            0.0
        } else {
            let pred = model.decode_step_suffix(&st, stem, t)?;
            pred.dist
                .data()
                .get(suffix)
                .ok_or(Error::IndexOutOfRange {
                    index: suffix,
                    size: pred.dist.len(),
                })?
                .ln()
        };
        score = score + stem_lp.ln() + suffix_lp;
        state = st.state().to_vec();
        prev = stem;
    }
    Ok(score)
}
