//! Offline reference pipeline and the offline-versus-streaming checker.

use std::fmt;

use super::pipeline::{acoustic_input, run_stream, StreamOptions, StreamOutput};
use super::source::{simulate_llm_source, SourceEvent};
use crate::llm2pnp::{greedy_decode, EncoderInput, PnpModel};
use crate::pnp2speech::{AcousticModel, AcousticOutput};
use crate::textdata::phones::PnpToken;
use crate::textdata::{tokenize, EmbeddingProvider, Vocab};
use crate::{Limit, Result};

/// Tolerance used when none is given: exact up to float noise with an
/// unbounded guardband, 1e-3 otherwise.
pub fn default_tolerance(acoustic: &AcousticModel) -> f64 {
    if acoustic.config.guardband.is_finite() {
        1e-3
    } else {
        1e-6
    }
}

/// Everything the pipeline needs besides the text.
#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    pub model: &'a PnpModel<f32>,
    pub acoustic: &'a AcousticModel,
    pub vocab: &'a Vocab,
    pub provider: &'a dyn EmbeddingProvider,
}

impl<'a> Pipeline<'a> {
    pub fn source(&self, context: &[String], words: &[String], inter_arrival_ms: u64) -> Result<Vec<SourceEvent>> {
        simulate_llm_source(
            context,
            words,
            self.vocab,
            self.provider,
            &self.model.config.layer_ids,
            inter_arrival_ms,
        )
    }

    pub fn stream(
        &self,
        context: &[String],
        words: &[String],
        inter_arrival_ms: u64,
        opts: &StreamOptions,
    ) -> Result<StreamOutput> {
        let events = self.source(context, words, inter_arrival_ms)?;
        run_stream(self.model, self.acoustic, &events, opts)
    }

    /// Full-text decoding followed by offline synthesis.
    pub fn offline(&self, context: &[String], words: &[String], lookahead: Limit) -> Result<(Vec<PnpToken>, AcousticOutput)> {
        if words.is_empty() {
            return Ok((Vec::new(), self.acoustic.forward(&[])?));
        }
        let tokens = tokenize(words, Some(self.vocab));
        let set = if self.model.config.uses_embeddings() {
            Some(self.provider.embed(context, words, &tokens, &self.model.config.layer_ids)?)
        } else {
            None
        };
        let input = EncoderInput::new(&tokens, set.as_ref(), &self.model.config)?;
        let pnp = greedy_decode(self.model, &input, lookahead)?.pnp;
        let out = self.acoustic.forward(&acoustic_input(&pnp))?;
        Ok((pnp, out))
    }

    /// Runs both paths on one text. `gate` overrides the streaming gate (for
    /// negative controls); `tolerance` defaults to [`default_tolerance`].
    pub fn check_equivalence(
        &self,
        context: &[String],
        words: &[String],
        lookahead: Limit,
        tolerance: Option<f64>,
        gate: Option<Limit>,
    ) -> Result<EquivalenceReport> {
        let (off_pnp, off) = self.offline(context, words, lookahead)?;
        let opts = StreamOptions {
            gate,
            ..StreamOptions::new(lookahead)
        };
        let on = self.stream(context, words, 0, &opts)?;
        let tolerance = tolerance.unwrap_or_else(|| default_tolerance(self.acoustic));
        let first_pnp_divergence = (0..off_pnp.len().max(on.pnp.len())).find(|&i| off_pnp.get(i) != on.pnp.get(i));
        let (a, b) = (&off.frames, &on.frames);
        let mut max_abs_diff = 0.0f64;
        let mut first_frame_divergence = None;
        for t in 0..a.rows().max(b.rows()) {
            let d = if t < a.rows() && t < b.rows() {
                a.row(t)
                    .iter()
                    .zip(b.row(t))
                    .map(|(x, y)| f64::from((x - y).abs()))
                    .fold(0.0, f64::max)
            } else {
                f64::INFINITY
            };
            max_abs_diff = max_abs_diff.max(d);
            if d > tolerance && first_frame_divergence.is_none() {
                first_frame_divergence = Some(t);
            }
        }
        Ok(EquivalenceReport {
            words: words.len(),
            pnp_offline: off_pnp.len(),
            pnp_streamed: on.pnp.len(),
            first_pnp_divergence,
            frames_offline: a.rows(),
            frames_streamed: b.rows(),
            max_abs_diff,
            first_frame_divergence,
            tolerance,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceReport {
    pub words: usize,
    pub pnp_offline: usize,
    pub pnp_streamed: usize,
    /// First PnP index whose token (symbol, prosody, frames, phrase, word)
    /// differs between the paths.
    pub first_pnp_divergence: Option<usize>,
    pub frames_offline: usize,
    pub frames_streamed: usize,
    /// Infinite when the frame counts differ.
    pub max_abs_diff: f64,
    /// First frame whose difference exceeds the tolerance.
    pub first_frame_divergence: Option<usize>,
    pub tolerance: f64,
}

impl EquivalenceReport {
    pub fn pnp_equal(&self) -> bool {
        self.first_pnp_divergence.is_none()
    }

    pub fn pass(&self) -> bool {
        self.pnp_equal() && self.first_frame_divergence.is_none()
    }

    pub fn to_kv_text(&self) -> String {
        let opt = |v: Option<usize>| v.map_or("none".to_string(), |v| v.to_string());
        format!(
            "pass={}\nwords={}\npnp_offline={}\npnp_streamed={}\nfirst_pnp_divergence={}\nframes_offline={}\nframes_streamed={}\nmax_abs_diff={:e}\nfirst_frame_divergence={}\ntolerance={:e}\n",
            self.pass(),
            self.words,
            self.pnp_offline,
            self.pnp_streamed,
            opt(self.first_pnp_divergence),
            self.frames_offline,
            self.frames_streamed,
            self.max_abs_diff,
            opt(self.first_frame_divergence),
            self.tolerance
        )
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} words, PnP {} ({} vs {}), frames {} vs {}, max |diff| {:.3e} (tolerance {:.0e})",
            if self.pass() { "PASS" } else { "FAIL" },
            self.words,
            match self.first_pnp_divergence {
                None => "identical".to_string(),
                Some(i) => format!("diverge at {i}"),
            },
            self.pnp_offline,
            self.pnp_streamed,
            self.frames_offline,
            self.frames_streamed,
            self.max_abs_diff,
            self.tolerance
        )?;
        if let Some(t) = self.first_frame_divergence {
            write!(f, ", first divergent frame {t}")?;
        }
        Ok(())
    }
}
