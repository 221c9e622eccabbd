use std::fs;
use std::path::Path;

use crate::error::{file_error, Error, Result};
use crate::text::{build_vocab, FactoredSentence, FactoredTokens, VocabKind, Vocabulary};

/// One id-encoded training example. The target excludes `</s>`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub src: Vec<usize>,
    pub target: FactoredSentence,
}

impl TrainingPair {
    pub fn new(src: Vec<usize>, substems: Vec<usize>, suffixes: Vec<usize>) -> Result<Self> {
        if src.is_empty() {
            return Err(Error::EmptySource);
        }
        Ok(TrainingPair {
            src,
            target: FactoredSentence::new(substems, suffixes)?,
        })
    }

    /// Target length including `</s>`.
    pub fn target_tokens(&self) -> usize {
        self.target.len() + 1
    }
}

/// Source, stem and suffix vocabularies of one model.
#[derive(Debug, Clone)]
pub struct Vocabs {
    pub src: Vocabulary,
    pub stem: Vocabulary,
    pub suffix: Vocabulary,
}

const FILES: [&str; 3] = ["src.vocab", "stem.vocab", "suffix.vocab"];

impl Vocabs {
    pub fn build<S: AsRef<str>>(
        src: &[Vec<S>],
        tgt: &[FactoredTokens],
        sizes: (usize, usize, usize),
    ) -> Result<Self> {
        let stems: Vec<&[String]> = tgt.iter().map(FactoredTokens::stems).collect();
        let suffixes: Vec<&[String]> = tgt.iter().map(FactoredTokens::suffixes).collect();
        Ok(Vocabs {
            src: build_vocab(src, sizes.0, VocabKind::Plain)?,
            stem: build_vocab(&to_vecs(&stems), sizes.1, VocabKind::Plain)?,
            suffix: build_vocab(&to_vecs(&suffixes), sizes.2, VocabKind::Suffix)?,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(file_error(dir))?;
        for (name, v) in FILES.iter().zip([&self.src, &self.stem, &self.suffix]) {
            let path = dir.join(name);
            fs::write(&path, v.to_text()).map_err(file_error(&path))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str, kind| -> Result<Vocabulary> {
            let path = dir.join(name);
            Vocabulary::parse(&fs::read_to_string(&path).map_err(file_error(&path))?, kind)
        };
        Ok(Vocabs {
            src: read(FILES[0], VocabKind::Plain)?,
            stem: read(FILES[1], VocabKind::Plain)?,
            suffix: read(FILES[2], VocabKind::Suffix)?,
        })
    }

    pub fn encode_target(&self, tgt: &FactoredTokens) -> Result<FactoredSentence> {
        FactoredSentence::new(self.stem.encode(tgt.stems()), self.suffix.encode(tgt.suffixes()))
    }
}

fn to_vecs(xs: &[&[String]]) -> Vec<Vec<String>> {
    xs.iter().map(|x| x.to_vec()).collect()
}

/// Encodes a parallel corpus, skipping pairs with an empty source side.
pub fn encode_pairs<S: AsRef<str>>(
    vocabs: &Vocabs,
    src: &[Vec<S>],
    tgt: &[FactoredTokens],
) -> Result<Vec<TrainingPair>> {
    if src.len() != tgt.len() {
        return Err(Error::LengthMismatch(format!(
            "{} source sentences but {} targets",
            src.len(),
            tgt.len()
        )));
    }
    let mut out = Vec::with_capacity(src.len());
    for (s, t) in src.iter().zip(tgt) {
        if s.is_empty() {
            continue;
        }
        out.push(TrainingPair {
            src: vocabs.src.encode(s),
            target: vocabs.encode_target(t)?,
        });
    }
    Ok(out)
}
