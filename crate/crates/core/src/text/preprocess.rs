use regex::Regex;

use crate::error::{Error, Result};

/// Ordered table of whole-token patterns and the placeholder each maps to.
#[derive(Debug, Clone)]
pub struct EntityRules {
    patterns: Vec<(Regex, String)>,
}

const DEFAULT_TABLE: &str = "\
# placeholder<TAB>pattern, tried in order against whole tokens
_date_\t\\d{4}-\\d{1,2}-\\d{1,2}
_date_\t\\d{1,2}[./]\\d{1,2}[./]\\d{2,4}
_time_\t\\d{1,2}:\\d{2}(:\\d{2})?
_number_\t[+-]?\\d+([.,]\\d+)*
";

impl Default for EntityRules {
    fn default() -> Self {
        EntityRules::parse(DEFAULT_TABLE).expect("built-in entity table")
    }
}

impl EntityRules {
    pub fn empty() -> Self {
        EntityRules { patterns: vec![] }
    }

    /// Parses `placeholder<TAB>regex` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (symbol, pattern) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse("entity rules", i + 1, "expected placeholder<TAB>pattern"))?;
            let re = Regex::new(&format!("^(?:{pattern})$"))
                .map_err(|e| Error::parse("entity rules", i + 1, e.to_string()))?;
            patterns.push((re, symbol.to_string()));
        }
        Ok(EntityRules { patterns })
    }

    fn replace(&self, token: &str) -> Option<&str> {
        self.patterns
            .iter()
            .find(|(re, _)| re.is_match(token))
            .map(|(_, s)| s.as_str())
    }
}

/// Lowercases, splits on whitespace and generalizes entity tokens.
pub fn preprocess(sentence: &str, rules: &EntityRules) -> Vec<String> {
    sentence
        .to_lowercase()
        .split_whitespace()
        .map(|tok| match rules.replace(tok) {
            Some(sym) => sym.to_string(),
            None => tok.to_string(),
        })
        .collect()
}

/// True iff both sides have a token count in `[lo, hi]`.
pub fn length_filter<S, T>(src: &[S], tgt: &[T], lo: usize, hi: usize) -> bool {
    (lo..=hi).contains(&src.len()) && (lo..=hi).contains(&tgt.len())
}
