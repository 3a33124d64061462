//! Numeric layer kernels. Every layer with a streaming form computes each
//! output from the same inputs in the same order as its offline form.

pub mod attention;
pub mod dense;
pub mod lccnn;
pub mod lstm;
pub mod upsample;
pub mod weights;

pub use attention::{attend, masked_attention, AttentionWeights, ScoreBias};
pub use dense::Affine;
pub use lccnn::{allocate_skew, Activation, ConvLayer, LcCnn, LcCnnStream, SkewAllocation};
pub use lstm::{chunked_blstm_forward, BlstmWeights, ChunkedBlstmStream, LstmState, LstmWeights};
pub use upsample::{default_sigmas, gaussian_upsample, upsample_weights, UpsampleStream};
pub use weights::TensorFile;
