use std::collections::HashMap;
use std::fmt::Write as _;

use super::stemmer::NO_SUFFIX;
use crate::error::{Error, Result};

pub const UNK: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
/// Id of the no-suffix tag in a suffix vocabulary.
pub const NO_SUFFIX_ID: usize = 3;

pub const UNK_TOKEN: &str = "<unk>";
pub const BOS_TOKEN: &str = "<s>";
pub const EOS_TOKEN: &str = "</s>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabKind {
    /// Source words or target stems: `<unk> <s> </s>` reserved.
    Plain,
    /// Suffixes: additionally reserves `N` at id 3.
    Suffix,
}

impl VocabKind {
    pub fn reserved(self) -> &'static [&'static str] {
        match self {
            VocabKind::Plain => &[UNK_TOKEN, BOS_TOKEN, EOS_TOKEN],
            VocabKind::Suffix => &[UNK_TOKEN, BOS_TOKEN, EOS_TOKEN, NO_SUFFIX],
        }
    }
}

/// Token/id bijection with reserved ids first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    kind: VocabKind,
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(kind: VocabKind) -> Self {
        let mut v = Vocabulary {
            kind,
            tokens: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
        };
        for t in kind.reserved() {
            v.push(t, 0);
        }
        v
    }

    fn push(&mut self, token: &str, count: u64) {
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.counts.push(count);
    }

    pub fn kind(&self) -> VocabKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn num_reserved(&self) -> usize {
        self.kind.reserved().len()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Id of `token`, or [`UNK`].
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map(String::as_str).unwrap_or(UNK_TOKEN)
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    /// `token<TAB>count` for every non-reserved entry, in id order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in self.num_reserved()..self.len() {
            let _ = writeln!(s, "{}\t{}", self.tokens[i], self.counts[i]);
        }
        s
    }

    pub fn parse(text: &str, kind: VocabKind) -> Result<Self> {
        let mut v = Vocabulary::new(kind);
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (tok, count) = line
                .rsplit_once('\t')
                .ok_or_else(|| Error::parse("vocabulary", i + 1, "expected token<TAB>count"))?;
            let count = count
                .parse()
                .map_err(|_| Error::parse("vocabulary", i + 1, format!("bad count {count:?}")))?;
            if v.contains(tok) {
                return Err(Error::parse("vocabulary", i + 1, format!("duplicate token {tok:?}")));
            }
            v.push(tok, count);
        }
        Ok(v)
    }
}

/// Reserved tokens, then the most frequent tokens (ties lexicographic) up to
/// `max_size` entries in total.
pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], max_size: usize, kind: VocabKind) -> Result<Vocabulary> {
    let mut v = Vocabulary::new(kind);
    if max_size <= v.len() {
        return Err(Error::InvalidArgument(format!(
            "vocabulary size {max_size} leaves no room beyond {} reserved tokens",
            v.len()
        )));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for sent in corpus {
        for t in sent {
            *freq.entry(t.as_ref()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|(t, _)| !kind.reserved().contains(t))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (t, c) in entries.into_iter().take(max_size - v.len()) {
        v.push(t, c);
    }
    Ok(v)
}
