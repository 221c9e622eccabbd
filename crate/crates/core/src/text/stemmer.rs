use std::fmt;

use crate::error::{Error, Result};

/// Suffix tag meaning "this stem carries no suffix".
pub const NO_SUFFIX: &str = "N";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRule {
    pub suffix: String,
    /// Minimum number of characters that must remain in the stem.
    pub min_stem_len: usize,
}

/// Longest-match suffix stripping table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemmerRules {
    rules: Vec<SuffixRule>,
    case_fold: bool,
}

impl StemmerRules {
    /// Rules are reordered by descending suffix length; equal lengths keep
    /// their given order.
    pub fn new(rules: Vec<SuffixRule>, case_fold: bool) -> Result<Self> {
        for r in &rules {
            if r.min_stem_len == 0 {
                return Err(Error::InvalidArgument(format!(
                    "rule {:?}: min stem length must be at least 1",
                    r.suffix
                )));
            }
            if r.suffix.is_empty() {
                return Err(Error::InvalidArgument("empty suffix rule".into()));
            }
        }
        let mut rules = rules;
        rules.sort_by_key(|r| std::cmp::Reverse(r.suffix.chars().count()));
        Ok(StemmerRules { rules, case_fold })
    }

    pub fn from_pairs(pairs: &[(&str, usize)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|(s, n)| SuffixRule {
                    suffix: s.to_string(),
                    min_stem_len: *n,
                })
                .collect(),
            false,
        )
    }

    /// Parses `suffix<TAB>min_stem_len` lines. `#` starts a comment; the
    /// directive `#!casefold` turns on case-insensitive matching.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        let mut case_fold = false;
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed == "#!casefold" {
                case_fold = true;
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (suffix, n) = trimmed
                .split_once('\t')
                .ok_or_else(|| Error::parse("stemmer rules", i + 1, "expected suffix<TAB>min_stem_len"))?;
            let min_stem_len = n
                .trim()
                .parse()
                .map_err(|_| Error::parse("stemmer rules", i + 1, format!("bad length {n:?}")))?;
            rules.push(SuffixRule {
                suffix: suffix.trim().to_string(),
                min_stem_len,
            });
        }
        Self::new(rules, case_fold)
    }

    /// Approximate Russian inflectional endings.
    pub fn russian() -> Self {
        Self::parse(include_str!("../../data/russian.rules")).expect("built-in Russian rules")
    }

    pub fn rules(&self) -> &[SuffixRule] {
        &self.rules
    }

    pub fn case_fold(&self) -> bool {
        self.case_fold
    }

    pub fn stem_word(&self, word: &str) -> MorphSplit {
        let chars: Vec<char> = word.chars().collect();
        let folded: Vec<char> = if self.case_fold {
            let lower: Vec<char> = word.to_lowercase().chars().collect();
            // Only fold when it keeps a one-to-one character mapping.
            if lower.len() == chars.len() {
                lower
            } else {
                chars.clone()
            }
        } else {
            chars.clone()
        };
        for rule in &self.rules {
            let suf: Vec<char> = rule.suffix.chars().collect();
            if folded.len() < suf.len() + rule.min_stem_len {
                continue;
            }
            let cut = folded.len() - suf.len();
            if folded[cut..] == suf[..] {
                return MorphSplit {
                    stem: chars[..cut].iter().collect(),
                    suffix: chars[cut..].iter().collect(),
                };
            }
        }
        MorphSplit {
            stem: word.to_string(),
            suffix: NO_SUFFIX.to_string(),
        }
    }
}

impl fmt::Display for StemmerRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.case_fold {
            writeln!(f, "#!casefold")?;
        }
        for r in &self.rules {
            writeln!(f, "{}\t{}", r.suffix, r.min_stem_len)?;
        }
        Ok(())
    }
}

/// A word cut into stem and suffix ([`NO_SUFFIX`] when nothing was stripped).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphSplit {
    pub stem: String,
    pub suffix: String,
}

impl MorphSplit {
    pub fn has_suffix(&self) -> bool {
        self.suffix != NO_SUFFIX
    }

    /// The suffix as it appears in the surface word.
    pub fn surface_suffix(&self) -> &str {
        if self.has_suffix() {
            &self.suffix
        } else {
            ""
        }
    }

    pub fn join(&self) -> String {
        format!("{}{}", self.stem, self.surface_suffix())
    }
}

pub fn stem_word(word: &str, rules: &StemmerRules) -> MorphSplit {
    rules.stem_word(word)
}
