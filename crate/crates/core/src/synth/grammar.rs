use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::text::{StemmerRules, SuffixRule, NO_SUFFIX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Number {
    Sg,
    Pl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    Nom,
    Acc,
    Gen,
}

/// One paradigm cell: a (number, case) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub number: Number,
    pub case: Case,
}

impl Cell {
    pub const ALL: [Cell; 6] = [
        Cell::new(Number::Sg, Case::Nom),
        Cell::new(Number::Sg, Case::Acc),
        Cell::new(Number::Sg, Case::Gen),
        Cell::new(Number::Pl, Case::Nom),
        Cell::new(Number::Pl, Case::Acc),
        Cell::new(Number::Pl, Case::Gen),
    ];

    pub const fn new(number: Number, case: Case) -> Self {
        Cell { number, case }
    }

    pub fn index(self) -> usize {
        Cell::ALL.iter().position(|&c| c == self).unwrap_or(0)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self.number {
            Number::Sg => "sg",
            Number::Pl => "pl",
        };
        let c = match self.case {
            Case::Nom => "nom",
            Case::Acc => "acc",
            Case::Gen => "gen",
        };
        write!(f, "{n}.{c}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordClass {
    Noun,
    Adjective,
    Verb,
}

impl WordClass {
    pub fn inflects(self) -> bool {
        !matches!(self, WordClass::Verb)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexeme {
    pub class: WordClass,
    pub source: String,
    pub stem: String,
}

/// Lexicon, paradigm table, and source-side marker words.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthGrammar {
    lexicon: Vec<Lexeme>,
    paradigm: [String; 6],
    plural_marker: String,
    genitive_marker: String,
    min_stem_len: usize,
}

impl SynthGrammar {
    /// The shipped grammar: 20 nouns, 10 adjectives, 8 verbs, 6 cells.
    pub fn default_grammar() -> Self {
        Self::parse(include_str!("../../data/default.grammar")).expect("built-in grammar")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lexicon = Vec::new();
        let mut paradigm: [Option<String>; 6] = Default::default();
        let mut plural = None;
        let mut genitive = None;
        let mut min_stem_len = 2;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::parse("grammar", i + 1, m);
            let f: Vec<&str> = line.split_whitespace().collect();
            match f.as_slice() {
                ["marker", "plural", w] => plural = Some(w.to_string()),
                ["marker", "genitive", w] => genitive = Some(w.to_string()),
                ["min_stem_len", n] => {
                    min_stem_len = n.parse().map_err(|_| err(format!("bad length {n:?}")))?;
                }
                ["cell", n, c, suffix] => {
                    let number = match *n {
                        "sg" => Number::Sg,
                        "pl" => Number::Pl,
                        _ => return Err(err(format!("unknown number {n:?}"))),
                    };
                    let case = match *c {
                        "nom" => Case::Nom,
                        "acc" => Case::Acc,
                        "gen" => Case::Gen,
                        _ => return Err(err(format!("unknown case {c:?}"))),
                    };
                    paradigm[Cell::new(number, case).index()] = Some(suffix.to_string());
                }
                [class @ ("noun" | "adj" | "verb"), src, stem] => lexicon.push(Lexeme {
                    class: match *class {
                        "noun" => WordClass::Noun,
                        "adj" => WordClass::Adjective,
                        _ => WordClass::Verb,
                    },
                    source: src.to_string(),
                    stem: stem.to_string(),
                }),
                _ => return Err(err(format!("cannot parse {line:?}"))),
            }
        }
        let missing = |what: &str| Error::parse("grammar", 0, format!("missing {what}"));
        let mut cells = Vec::with_capacity(6);
        for (k, s) in paradigm.into_iter().enumerate() {
            cells.push(s.ok_or_else(|| missing(&format!("cell {}", Cell::ALL[k])))?);
        }
        let g = SynthGrammar {
            lexicon,
            paradigm: cells.try_into().expect("six cells"),
            plural_marker: plural.ok_or_else(|| missing("plural marker"))?,
            genitive_marker: genitive.ok_or_else(|| missing("genitive marker"))?,
            min_stem_len,
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks that the lexicon is unambiguous and that every inflected form
    /// factors back into its own stem and suffix under [`Self::stemmer_rules`].
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Error::InvalidArgument(format!("grammar: {m}"));
        let distinct: HashSet<&str> = self.paradigm.iter().map(String::as_str).collect();
        if distinct.len() != 6 || distinct.contains(NO_SUFFIX) {
            return Err(bad("paradigm suffixes must be distinct and differ from N".into()));
        }
        if self.min_stem_len == 0 {
            return Err(bad("min_stem_len must be positive".into()));
        }
        for class in [WordClass::Noun, WordClass::Verb] {
            if !self.lexicon.iter().any(|l| l.class == class) {
                return Err(bad(format!("no {class:?} entries")));
            }
        }
        let mut sources = HashSet::new();
        let mut stems = HashSet::new();
        for l in &self.lexicon {
            if !sources.insert(l.source.as_str()) || !stems.insert(l.stem.as_str()) {
                return Err(bad(format!("duplicate lexeme {:?} / {:?}", l.source, l.stem)));
            }
            if l.source == self.plural_marker || l.source == self.genitive_marker {
                return Err(bad(format!("{:?} is also a marker word", l.source)));
            }
        }
        let rules = self.stemmer_rules()?;
        for l in &self.lexicon {
            let forms: Vec<(String, &str)> = if l.class.inflects() {
                self.paradigm.iter().map(|s| (format!("{}{s}", l.stem), s.as_str())).collect()
            } else {
                vec![(l.stem.clone(), NO_SUFFIX)]
            };
            for (word, suffix) in forms {
                let split = rules.stem_word(&word);
                if split.stem != l.stem || split.suffix != suffix {
                    return Err(bad(format!(
                        "{word:?} factors as {}+{}, expected {}+{suffix}",
                        split.stem, split.suffix, l.stem
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn lexicon(&self) -> &[Lexeme] {
        &self.lexicon
    }

    pub fn of_class(&self, class: WordClass) -> impl Iterator<Item = &Lexeme> {
        self.lexicon.iter().filter(move |l| l.class == class)
    }

    pub fn suffix(&self, cell: Cell) -> &str {
        &self.paradigm[cell.index()]
    }

    pub fn paradigm(&self) -> &[String; 6] {
        &self.paradigm
    }

    pub fn plural_marker(&self) -> &str {
        &self.plural_marker
    }

    pub fn genitive_marker(&self) -> &str {
        &self.genitive_marker
    }

    /// Stemmer that strips exactly this grammar's paradigm suffixes.
    pub fn stemmer_rules(&self) -> Result<StemmerRules> {
        StemmerRules::new(
            self.paradigm
                .iter()
                .map(|s| SuffixRule {
                    suffix: s.clone(),
                    min_stem_len: self.min_stem_len,
                })
                .collect(),
            false,
        )
    }
}
