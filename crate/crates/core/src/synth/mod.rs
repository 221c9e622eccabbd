//! Deterministic toy parallel corpus with a known inflectional paradigm.

mod generate;
mod grammar;

pub use generate::{generate, holdout_split, HoldoutSplit, SynthSentence, SynthToken};
pub use grammar::{Case, Cell, Lexeme, Number, SynthGrammar, WordClass};
