//! End-to-end streaming: a simulated word source feeding the word-gated
//! predictor, whose PnP tokens feed the streaming acoustic model.

pub mod equivalence;
pub mod fixtures;
pub mod pipeline;
pub mod source;

pub use equivalence::{default_tolerance, EquivalenceReport, Pipeline};
pub use pipeline::{acoustic_input, run_stream, ItemKind, LatencyTrace, StreamOptions, StreamOutput, TraceRecord, TRACE_COLUMNS};
pub use source::{simulate_llm_source, split_text, SourceEvent, WordArrivalEvent};
