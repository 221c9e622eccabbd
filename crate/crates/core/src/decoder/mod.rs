//! Beam search over (stem, suffix) pairs and conversion of the result to words.

mod beam;
mod finalize;

pub use beam::{beam_search, expand_step, greedy_decode, initial_beam, rescore, BeamConfig, Hypothesis};
pub use finalize::{finalize, finalize_tokens};
