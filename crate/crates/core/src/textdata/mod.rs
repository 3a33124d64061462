//! Synthetic text, tokenization, the teacher oracle and dataset records.

pub mod corpus;
pub mod dataset;
pub mod embed;
pub mod lexicon;
pub mod normalize;
pub mod phones;
pub mod teacher;
pub mod tokenize;

pub use corpus::{gen_corpus, read_corpus, write_corpus, Paragraph};
pub use dataset::{build_dataset, build_dataset_limited, split_paragraph, Dataset, Sample, WordInfo};
pub use embed::{EmbeddingProvider, EmbeddingSet, HashEmbedder, DEFAULT_LAYER_IDS, EMBED_DIM};
pub use phones::{PhraseType, PnpKind, PnpToken, ProsodyVector};
pub use teacher::{teacher_g2p, teacher_labels, teacher_prosody, WordTags};
pub use tokenize::{detokenize, tokenize, Token, Vocab};
