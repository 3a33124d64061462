//! Streaming phone-and-prosody (PnP) prediction from an arriving word stream,
//! chunked acoustic frame synthesis with bounded algorithmic delay, and the
//! offline-to-streaming distillation tooling around them.
//!
//! Module map:
//!
//! * [`textdata`]: synthetic corpus, tokenization, normalization, the
//!   full-lookahead teacher, contextual embeddings and dataset files.
//! * [`mask`]: word-restricted attention masks.
//! * [`layers`]: numeric kernels with matching offline and streaming forms.
//! * [`llm2pnp`]: the restricted-attention encoder-decoder and its
//!   word-gated incremental decoder.
//! * [`pnp2speech`]: the streamable acoustic model and delay accounting.
//! * [`trainer`]: distillation loss, gradients, optimizer and WER evaluation.
//! * [`runtime`]: the end-to-end simulated streaming pipeline.

pub mod autodiff;
pub mod config;
pub mod error;
pub mod layers;
pub mod limit;
pub mod llm2pnp;
pub mod mask;
pub mod pnp2speech;
pub mod rng;
pub mod runtime;
pub mod tensor;
pub mod textdata;
pub mod trainer;

pub use error::{Error, Result};
pub use limit::Limit;
pub use tensor::Matrix;
