use super::stemmer::{MorphSplit, StemmerRules, NO_SUFFIX};
use crate::error::{Error, Result};

/// Target sentence as parallel stem (or sub-stem) and suffix strings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactoredTokens {
    stems: Vec<String>,
    suffixes: Vec<String>,
}

impl FactoredTokens {
    pub fn new(stems: Vec<String>, suffixes: Vec<String>) -> Result<Self> {
        if stems.len() != suffixes.len() {
            return Err(Error::LengthMismatch(format!(
                "{} stems vs {} suffixes",
                stems.len(),
                suffixes.len()
            )));
        }
        Ok(FactoredTokens { stems, suffixes })
    }

    pub fn stems(&self) -> &[String] {
        &self.stems
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn len(&self) -> usize {
        self.stems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stems.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.stems
            .iter()
            .zip(&self.suffixes)
            .map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<String>) {
        (self.stems, self.suffixes)
    }
}

/// Target sentence as parallel sub-stem and suffix ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FactoredSentence {
    substems: Vec<usize>,
    suffixes: Vec<usize>,
}

impl FactoredSentence {
    pub fn new(substems: Vec<usize>, suffixes: Vec<usize>) -> Result<Self> {
        if substems.len() != suffixes.len() {
            return Err(Error::LengthMismatch(format!(
                "{} sub-stems vs {} suffixes",
                substems.len(),
                suffixes.len()
            )));
        }
        Ok(FactoredSentence { substems, suffixes })
    }

    pub fn substems(&self) -> &[usize] {
        &self.substems
    }

    pub fn suffixes(&self) -> &[usize] {
        &self.suffixes
    }

    pub fn len(&self) -> usize {
        self.substems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.substems.is_empty()
    }
}

/// Stems every word of a sentence.
pub fn factor_sentence<S: AsRef<str>>(words: &[S], rules: &StemmerRules) -> FactoredTokens {
    let (stems, suffixes) = words
        .iter()
        .map(|w| {
            let MorphSplit { stem, suffix } = rules.stem_word(w.as_ref());
            (stem, suffix)
        })
        .unzip();
    FactoredTokens { stems, suffixes }
}

/// Inverse of [`factor_sentence`] on unsplit stems.
pub fn rejoin(f: &FactoredTokens) -> Vec<String> {
    f.iter()
        .map(|(stem, suffix)| {
            if suffix == NO_SUFFIX {
                stem.to_string()
            } else {
                format!("{stem}{suffix}")
            }
        })
        .collect()
}
