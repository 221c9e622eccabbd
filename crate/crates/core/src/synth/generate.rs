use std::collections::{BTreeSet, HashSet};

use super::grammar::{Case, Cell, Lexeme, Number, SynthGrammar, WordClass};
use crate::error::{Error, Result};
use crate::numerics::Rng;
use crate::text::{FactoredTokens, NO_SUFFIX};

const GENERATE_STREAM: u64 = 0;
const HOLDOUT_STREAM: u64 = 1;
const P_ADJECTIVE: f64 = 0.5;
const P_PLURAL: f64 = 0.5;
const P_OBJECT: f64 = 0.7;
const P_GENITIVE: f64 = 0.4;
/// Share of fully-seen sentences kept out of training as a seen-test set.
const SEEN_TEST_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthToken {
    pub stem: String,
    /// `N` for uninflected words.
    pub suffix: String,
    pub cell: Option<Cell>,
}

impl SynthToken {
    pub fn word(&self) -> String {
        if self.suffix == NO_SUFFIX {
            self.stem.clone()
        } else {
            format!("{}{}", self.stem, self.suffix)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSentence {
    pub source: Vec<String>,
    pub target: Vec<SynthToken>,
}

impl SynthSentence {
    pub fn target_words(&self) -> Vec<String> {
        self.target.iter().map(SynthToken::word).collect()
    }

    /// Gold stem/suffix factoring of the target.
    pub fn factored(&self) -> FactoredTokens {
        let stems = self.target.iter().map(|t| t.stem.clone()).collect();
        let suffixes = self.target.iter().map(|t| t.suffix.clone()).collect();
        FactoredTokens::new(stems, suffixes).expect("aligned by construction")
    }

    /// Target positions whose (stem, cell) is in `combos`.
    pub fn positions_in(&self, combos: &BTreeSet<(String, Cell)>) -> Vec<usize> {
        self.target
            .iter()
            .enumerate()
            .filter(|(_, t)| t.cell.is_some_and(|c| combos.contains(&(t.stem.clone(), c))))
            .map(|(i, _)| i)
            .collect()
    }

    fn combos(&self) -> impl Iterator<Item = (String, Cell)> + '_ {
        self.target.iter().filter_map(|t| t.cell.map(|c| (t.stem.clone(), c)))
    }
}

fn pick<'g>(rng: &mut Rng, items: &[&'g Lexeme]) -> &'g Lexeme {
    items[rng.below(items.len())]
}

struct Pools<'g> {
    nouns: Vec<&'g Lexeme>,
    adjectives: Vec<&'g Lexeme>,
    verbs: Vec<&'g Lexeme>,
}

fn noun_phrase(g: &SynthGrammar, pools: &Pools<'_>, case: Case, rng: &mut Rng, s: &mut SynthSentence) {
    let adj = if !pools.adjectives.is_empty() && rng.bernoulli(P_ADJECTIVE) {
        Some(pick(rng, &pools.adjectives))
    } else {
        None
    };
    let noun = pick(rng, &pools.nouns);
    let number = if rng.bernoulli(P_PLURAL) { Number::Pl } else { Number::Sg };
    let cell = Cell::new(number, case);
    for l in adj.into_iter().chain([noun]) {
        s.source.push(l.source.clone());
        s.target.push(SynthToken {
            stem: l.stem.clone(),
            suffix: g.suffix(cell).to_string(),
            cell: Some(cell),
        });
    }
    if number == Number::Pl {
        s.source.push(g.plural_marker().to_string());
    }
}

/// Samples `n` sentences of the form `NP-nom VERB [NP-acc] [of NP-gen]`.
///
/// The source marks plural with a marker word and genitive with a
/// preposition; the target inflects adjectives and nouns for both.
pub fn generate(grammar: &SynthGrammar, n: usize, seed: u64) -> Result<Vec<SynthSentence>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one sentence".into()));
    }
    let pools = Pools {
        nouns: grammar.of_class(WordClass::Noun).collect(),
        adjectives: grammar.of_class(WordClass::Adjective).collect(),
        verbs: grammar.of_class(WordClass::Verb).collect(),
    };
    let mut rng = Rng::with_stream(seed, GENERATE_STREAM);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = SynthSentence {
            source: Vec::new(),
            target: Vec::new(),
        };
        noun_phrase(grammar, &pools, Case::Nom, &mut rng, &mut s);
        let verb = pick(&mut rng, &pools.verbs);
        s.source.push(verb.source.clone());
        s.target.push(SynthToken {
            stem: verb.stem.clone(),
            suffix: NO_SUFFIX.to_string(),
            cell: None,
        });
        if rng.bernoulli(P_OBJECT) {
            noun_phrase(grammar, &pools, Case::Acc, &mut rng, &mut s);
        }
        if rng.bernoulli(P_GENITIVE) {
            s.source.push(grammar.genitive_marker().to_string());
            noun_phrase(grammar, &pools, Case::Gen, &mut rng, &mut s);
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct HoldoutSplit {
    pub train: Vec<SynthSentence>,
    pub test_seen: Vec<SynthSentence>,
    /// Sentences with at least one held-out (stem, cell) form and only training stems.
    pub test_novel: Vec<SynthSentence>,
    /// One withheld cell per inflecting stem.
    pub held_out: BTreeSet<(String, Cell)>,
}

impl HoldoutSplit {
    /// Held-out forms that actually occur in the novel test set.
    pub fn novel_items(&self) -> BTreeSet<(String, Cell)> {
        self.test_novel
            .iter()
            .flat_map(|s| s.combos())
            .filter(|c| self.held_out.contains(c))
            .collect()
    }
}

/// Withholds one paradigm cell per inflecting stem from training.
pub fn holdout_split(corpus: &[SynthSentence], grammar: &SynthGrammar, seed: u64) -> Result<HoldoutSplit> {
    let mut rng = Rng::with_stream(seed, HOLDOUT_STREAM);
    let held_out: BTreeSet<(String, Cell)> = grammar
        .lexicon()
        .iter()
        .filter(|l| l.class.inflects())
        .map(|l| (l.stem.clone(), Cell::ALL[rng.below(Cell::ALL.len())]))
        .collect();

    let (seen, novel): (Vec<&SynthSentence>, Vec<&SynthSentence>) = corpus
        .iter()
        .partition(|s| !s.combos().any(|c| held_out.contains(&c)));

    let mut order: Vec<usize> = (0..seen.len()).collect();
    rng.shuffle(&mut order);
    let n_test = (seen.len() as f64 * SEEN_TEST_FRACTION).round() as usize;
    let test_idx: HashSet<usize> = order[..n_test].iter().copied().collect();
    let mut train = Vec::new();
    let mut test_seen = Vec::new();
    for (i, s) in seen.into_iter().enumerate() {
        if test_idx.contains(&i) {
            test_seen.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    let train_stems: HashSet<&str> = train
        .iter()
        .flat_map(|s| s.target.iter().map(|t| t.stem.as_str()))
        .collect();
    let test_novel: Vec<SynthSentence> = novel
        .into_iter()
        .filter(|s| s.target.iter().all(|t| train_stems.contains(t.stem.as_str())))
        .cloned()
        .collect();
    if test_novel.is_empty() || train.is_empty() {
        return Err(Error::GrammarTooSmall(format!(
            "{} sentences yield {} training and {} novel-form sentences",
            corpus.len(),
            train.len(),
            test_novel.len()
        )));
    }
    Ok(HoldoutSplit {
        train,
        test_seen,
        test_novel,
        held_out,
    })
}
