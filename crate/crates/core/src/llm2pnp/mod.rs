//! Restricted-attention encoder-decoder from word tokens (plus contextual
//! embeddings) to phones and prosody, with word-gated incremental decoding.

pub mod config;
pub mod decode;
pub mod model;

pub use config::PnpModelConfig;
pub use decode::{greedy_decode, Decoded, IncrementalDecoder, MAX_PNP_PER_WORD};
pub use model::{DecoderInput, EncoderInput, Encoded, HeadOutputs, PnpModel, StepOutput};
