//! Raw parallel text to factored training data.

mod bpe;
mod factor;
mod ibm1;
pub mod io;
mod preprocess;
mod stemmer;
mod vocab;

pub use bpe::{apply_bpe_with_suffix_adjust, learn_bpe, undo_bpe, BpeModel, CONTINUATION_MARKER};
pub use factor::{factor_sentence, rejoin, FactoredSentence, FactoredTokens};
pub use ibm1::{ibm1_score_and_filter, ibm1_train, ibm1_train_traced, Ibm1Model, Ibm1Trace, DEFAULT_IBM1_THRESHOLD, NULL_TOKEN};
pub use preprocess::{length_filter, preprocess, EntityRules};
pub use stemmer::{stem_word, MorphSplit, StemmerRules, SuffixRule, NO_SUFFIX};
pub use vocab::{
    build_vocab, VocabKind, Vocabulary, BOS, BOS_TOKEN, EOS, EOS_TOKEN, NO_SUFFIX_ID, UNK, UNK_TOKEN,
};
