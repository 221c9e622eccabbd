//! Factored stem/suffix neural machine translation.
//!
//! The target side of every sentence pair is represented as two aligned
//! sequences: sub-stems (BPE fragments of rule-stemmed words) and suffixes.
//! A bi-GRU attention encoder-decoder predicts a stem at each step and then
//! immediately predicts that stem's suffix from the stem hidden state, the
//! chosen stem's embedding and the shared source context.
//!
//! Module map:
//!
//! - [`text`]: preprocessing, stemming, factoring, BPE with suffix
//!   adjustment, vocabularies and IBM Model 1 corpus filtering.
//! - [`numerics`]: tensors, reverse-mode differentiation, GRU cell,
//!   dropout, checkpoints and finite-difference gradient checking.
//! - [`model`]: the encoder-decoder with stem and suffix heads, the joint
//!   objective, Adam, training and parameter-averaging distributed training.
//! - [`decoder`]: beam search over (stem, suffix) candidates and conversion
//!   of hypotheses back to surface words.
//! - [`eval`]: corpus BLEU, stem BLEU and vocabulary coverage.
//! - [`synth`]: a synthetic agglutinative target language with known
//!   morphology.

pub mod decoder;
pub mod error;
pub mod eval;
pub mod model;
pub mod numerics;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
