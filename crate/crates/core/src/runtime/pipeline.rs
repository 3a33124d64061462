//! The end-to-end streaming pipeline on a simulated clock.
//!
//! Events are processed in arrival order. Computation is instantaneous on the
//! simulated clock, so an emission is stamped with the arrival time of the
//! event that released it. Content never depends on the timestamps.

use std::fmt::Write as _;
use std::time::Instant;

use super::source::SourceEvent;
use crate::llm2pnp::{IncrementalDecoder, PnpModel};
use crate::pnp2speech::{delay_accounting, AcousticModel, AcousticStream, DelayReport};
use crate::tensor::Matrix;
use crate::textdata::phones::{PnpToken, EOS};
use crate::{Error, Limit, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamOptions {
    /// Word lookahead `L` of the predictor's cross-attention mask.
    pub lookahead: Limit,
    /// Gate override for negative controls; `None` gates on `lookahead`.
    pub gate: Option<Limit>,
    /// Record wall-clock microseconds per emission. Off by default because
    /// it makes traces non-reproducible.
    pub wall_clock: bool,
}

impl StreamOptions {
    pub fn new(lookahead: Limit) -> Self {
        Self {
            lookahead,
            gate: None,
            wall_clock: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItemKind {
    Pnp,
    Frame,
}

impl ItemKind {
    pub fn name(self) -> &'static str {
        match self {
            ItemKind::Pnp => "pnp",
            ItemKind::Frame => "frame",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub kind: ItemKind,
    pub index: usize,
    /// Word the item belongs to (a frame belongs to its owning PnP token's word).
    pub word_index: usize,
    pub emit_ms: u64,
    /// Index of the arrival that released the item; the end marker counts as
    /// arrival number `words`.
    pub trigger_word: usize,
    pub wall_us: u64,
}

pub const TRACE_COLUMNS: [&str; 6] = ["item_kind", "item_index", "word_index", "emit_ms", "trigger_word", "wall_us"];

#[derive(Clone, Debug, PartialEq)]
pub struct LatencyTrace {
    pub records: Vec<TraceRecord>,
    /// Arrival time of each word.
    pub arrivals: Vec<u64>,
    pub end_ms: u64,
    pub lookahead: Limit,
    pub delay: DelayReport,
}

impl LatencyTrace {
    fn first(&self, kind: ItemKind) -> Option<u64> {
        self.records.iter().find(|r| r.kind == kind).map(|r| r.emit_ms)
    }

    pub fn time_to_first_pnp(&self) -> Option<u64> {
        self.first(ItemKind::Pnp)
    }

    pub fn time_to_first_frame(&self) -> Option<u64> {
        self.first(ItemKind::Frame)
    }

    /// Per word: time from its arrival to the emission of its last frame
    /// (`None` for words that own no frames).
    pub fn word_completion_lag(&self) -> Vec<Option<u64>> {
        let mut last = vec![None; self.arrivals.len()];
        for r in self.records.iter().filter(|r| r.kind == ItemKind::Frame) {
            if let Some(slot) = last.get_mut(r.word_index) {
                *slot = Some(r.emit_ms);
            }
        }
        last.iter()
            .zip(&self.arrivals)
            .map(|(l, &a)| l.map(|t: u64| t.saturating_sub(a)))
            .collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::format("trace csv", e.to_string());
        w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
        for r in &self.records {
            w.write_record([
                r.kind.name().to_string(),
                r.index.to_string(),
                r.word_index.to_string(),
                r.emit_ms.to_string(),
                r.trigger_word.to_string(),
                r.wall_us.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::format("trace csv", e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::format("trace csv", e.to_string()))
    }

    pub fn summary(&self) -> String {
        let ms = |v: Option<u64>| v.map_or("-".to_string(), |v| format!("{v} ms"));
        let mut s = String::new();
        let _ = writeln!(s, "words {}, end marker at {} ms, L = {}", self.arrivals.len(), self.end_ms, self.lookahead);
        let _ = writeln!(s, "time to first PnP   {}", ms(self.time_to_first_pnp()));
        let _ = writeln!(s, "time to first frame {}", ms(self.time_to_first_frame()));
        let lags: Vec<String> = self.word_completion_lag().into_iter().map(|l| l.map_or("-".into(), |v| v.to_string())).collect();
        let _ = writeln!(s, "word completion lag (ms) [{}]", lags.join(", "));
        let _ = writeln!(s, "{}", self.delay);
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamOutput {
    /// Every PnP token, eos included.
    pub pnp: Vec<PnpToken>,
    pub frames: Matrix<f32>,
    pub trace: LatencyTrace,
}

/// The acoustic model never receives eos.
pub fn acoustic_input(pnp: &[PnpToken]) -> Vec<PnpToken> {
    pnp.iter().filter(|p| p.symbol != EOS).cloned().collect()
}

fn validate(model: &PnpModel<f32>, acoustic: &AcousticModel, events: &[SourceEvent]) -> Result<()> {
    acoustic.config.validate()?;
    let mut last_ms = 0;
    for (k, ev) in events.iter().enumerate() {
        if ev.arrival_ms() < last_ms {
            return Err(Error::Invalid(format!("event {k} arrives before its predecessor")));
        }
        last_ms = ev.arrival_ms();
        match ev {
            SourceEvent::Word(w) => {
                if w.word_index != k {
                    return Err(Error::Invalid(format!("event {k} carries word {}", w.word_index)));
                }
                if let Some(t) = w.tokens.iter().find(|t| t.id >= model.config.vocab_size) {
                    return Err(Error::Config(format!(
                        "token id {} outside the model vocabulary of {}",
                        t.id, model.config.vocab_size
                    )));
                }
                match (&w.embeddings, model.config.uses_embeddings()) {
                    (Some(e), true) if e.cols() == model.config.embedding_input_width() => {}
                    (None, false) | (Some(_), false) => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "word {k}: embeddings do not match the model's {} layer(s) of width {}",
                            model.config.layer_ids.len(),
                            model.config.embed_dim
                        )))
                    }
                }
            }
            SourceEvent::End { .. } if k + 1 == events.len() => {}
            SourceEvent::End { .. } => return Err(Error::Invalid("end marker before the last event".into())),
        }
    }
    if !matches!(events.last(), Some(SourceEvent::End { .. })) {
        return Err(Error::Invalid("event stream lacks an end marker".into()));
    }
    Ok(())
}

/// Runs the word-gated predictor into the streaming acoustic model.
pub fn run_stream(
    model: &PnpModel<f32>,
    acoustic: &AcousticModel,
    events: &[SourceEvent],
    opts: &StreamOptions,
) -> Result<StreamOutput> {
    validate(model, acoustic, events)?;
    let started = Instant::now();
    let wall = |on: bool| if on { started.elapsed().as_micros() as u64 } else { 0 };
    let mut dec = IncrementalDecoder::with_gate(model, opts.lookahead, opts.gate.unwrap_or(opts.lookahead));
    let mut ac = AcousticStream::new(acoustic)?;
    let mut frame_word: Vec<usize> = Vec::new();
    let mut frames = Matrix::empty(acoustic.config.frame_dim);
    let mut pnp = Vec::new();
    let mut records = Vec::new();
    let mut arrivals = Vec::new();
    let mut end_ms = 0;
    for ev in events {
        let now = ev.arrival_ms();
        let trigger = match ev {
            SourceEvent::Word(w) => {
                let emb = if model.config.uses_embeddings() { w.embeddings.as_ref() } else { None };
                let ids: Vec<usize> = w.tokens.iter().map(|t| t.id).collect();
                dec.push_word(&ids, emb)?;
                arrivals.push(now);
                w.word_index
            }
            SourceEvent::End { .. } => {
                dec.end();
                end_ms = now;
                arrivals.len()
            }
        };
        let new = dec.poll()?;
        for p in &new {
            records.push(TraceRecord {
                kind: ItemKind::Pnp,
                index: pnp.len(),
                word_index: p.word_index,
                emit_ms: now,
                trigger_word: trigger,
                wall_us: wall(opts.wall_clock),
            });
            pnp.push(p.clone());
        }
        let input = acoustic_input(&new);
        for p in &input {
            frame_word.extend(std::iter::repeat_n(p.word_index, p.frames));
        }
        let mut out = ac.push(&input)?;
        if dec.is_finished() {
            out.append(&ac.flush()?)?;
        }
        for row in out.iter_rows() {
            let index = frames.rows();
            records.push(TraceRecord {
                kind: ItemKind::Frame,
                index,
                word_index: frame_word[index],
                emit_ms: now,
                trigger_word: trigger,
                wall_us: wall(opts.wall_clock),
            });
            frames.push_row(row)?;
        }
    }
    debug_assert!(ac.is_flushed());
    Ok(StreamOutput {
        pnp,
        frames,
        trace: LatencyTrace {
            records,
            arrivals,
            end_ms,
            lookahead: opts.lookahead,
            delay: delay_accounting(&acoustic.config)?,
        },
    })
}
