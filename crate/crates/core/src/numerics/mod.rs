//! Dense f64 tensors and a small reverse-mode differentiation engine.
//!
//! Everything the encoder-decoder needs lives here: matrix-vector affine
//! maps, elementwise nonlinearities, softmax, negative log-likelihood, a GRU
//! cell, dropout masks, binary checkpoints and a central-difference gradient
//! checker.

mod checkpoint;
mod gradcheck;
mod graph;
mod gru;
mod ops;
mod params;
mod rng;
mod tensor;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use gradcheck::{finite_diff_check, finite_diff_check_with, relative_error, GradCheckReport, Stencil};
pub use graph::{Gradients, Graph, Var};
pub use gru::{GruParams, GruWeights};
pub use ops::{cross_entropy, dropout, log_softmax, sigmoid, softmax, NLL_EPSILON};
pub use params::{ParamId, ParamStore};
pub use rng::Rng;
pub use tensor::Tensor;
