//! Bi-GRU attention encoder-decoder with separate stem and suffix heads.
//!
//! At decoding step `t` the network:
//!
//! 1. attends over the encoder rows with the previous decoder state,
//! 2. updates the decoder state from the previous stem embedding and context,
//! 3. predicts the stem from `tanh(W [prev stem emb; state; context])`,
//! 4. predicts the suffix from `tanh(W' [state; chosen stem emb; context])`.
//!
//! Suffix predictions are never fed back into the recurrence.

mod adam;
mod config;
mod data;
mod network;
mod train;

pub use adam::{adam_update, AdamConfig, AdamState};
pub use config::{ModelConfig, TrainConfig, DEFAULT_INIT_SCALE};
pub use data::{encode_pairs, TrainingPair, Vocabs};
pub use network::{
    DecoderStepState, EncoderState, LossBreakdown, Model, SuffixPrediction, STEM_HEAD_PARAMS,
    SUFFIX_BRANCH_PARAMS,
};
pub use train::{
    distributed_train, distributed_train_shards, train, DistributedOutcome, EpochLoss, TrainOutcome,
};
