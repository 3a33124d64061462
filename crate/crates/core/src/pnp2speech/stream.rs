//! Streaming form of the acoustic model. Each sub-layer runs in its own
//! streaming state; rows are handed on as soon as a stage releases them.

use std::collections::VecDeque;

use super::model::{residual, token_durations, AcousticModel};
use crate::layers::{default_sigmas, ChunkedBlstmStream, LcCnnStream, LstmState, UpsampleStream};
use crate::tensor::Matrix;
use crate::textdata::phones::PnpToken;
use crate::{Error, Result};

pub struct AcousticStream<'m> {
    model: &'m AcousticModel,
    encoder: LcCnnStream,
    blstm: ChunkedBlstmStream,
    upsampler: UpsampleStream,
    /// Durations of tokens not yet released by the BLSTM.
    pending_durations: VecDeque<usize>,
    dec_state: LstmState,
    prev_frame: Vec<f32>,
    postnet: LcCnnStream,
    /// Decoder frames waiting for their PostNet residual.
    pending_frames: VecDeque<Vec<f32>>,
    tokens_in: usize,
    frames_out: usize,
    flushed: bool,
    /// Copy of every pre-PostNet decoder frame, when requested.
    decoder_log: Option<Matrix<f32>>,
}

impl<'m> AcousticStream<'m> {
    pub fn new(model: &'m AcousticModel) -> Result<Self> {
        let (dec_state, prev_frame) = model.decoder_start();
        Ok(Self {
            model,
            encoder: model.encoder.stream(),
            blstm: ChunkedBlstmStream::new(&model.blstm, model.config.blstm_chunk)?,
            upsampler: UpsampleStream::new(model.blstm.output_size(), model.config.guardband),
            pending_durations: VecDeque::new(),
            dec_state,
            prev_frame,
            postnet: model.postnet.stream(),
            pending_frames: VecDeque::new(),
            tokens_in: 0,
            frames_out: 0,
            flushed: false,
            decoder_log: None,
        })
    }

    /// Also keep the decoder frames before the PostNet residual.
    pub fn record_decoder(mut self) -> Self {
        self.decoder_log = Some(Matrix::empty(self.model.config.frame_dim));
        self
    }

    pub fn decoder_frames(&self) -> Option<&Matrix<f32>> {
        self.decoder_log.as_ref()
    }

    pub fn tokens_pushed(&self) -> usize {
        self.tokens_in
    }

    pub fn frames_emitted(&self) -> usize {
        self.frames_out
    }

    pub fn is_flushed(&self) -> bool {
        self.flushed
    }

    /// Rows held across all stages. Bounded by the layer extents, the chunk
    /// size and the guardband, never by the sequence length.
    pub fn buffered(&self) -> usize {
        self.encoder.buffered()
            + self.blstm.buffered()
            + self.upsampler.buffered()
            + self.pending_durations.len()
            + self.postnet.buffered()
            + self.pending_frames.len()
    }

    pub fn push(&mut self, tokens: &[PnpToken]) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("acoustic stream"));
        }
        let durations = token_durations(tokens)?;
        self.pending_durations.extend(durations);
        self.tokens_in += tokens.len();
        let x = self.model.embed_all(tokens)?;
        let cnn = self.encoder.push(&self.model.encoder, &x)?;
        let enc = self.blstm.push(&self.model.blstm, &cnn)?;
        let up = self.upsample(&enc)?;
        let dec = self.decode(&up)?;
        let post = self.postnet.push(&self.model.postnet, &dec)?;
        self.finish(&post)
    }

    /// Ends the stream and releases every remaining frame.
    pub fn flush(&mut self) -> Result<Matrix<f32>> {
        if self.flushed {
            return Err(Error::PushAfterFlush("acoustic stream"));
        }
        self.flushed = true;
        let cnn = self.encoder.flush(&self.model.encoder)?;
        let mut enc = self.blstm.push(&self.model.blstm, &cnn)?;
        enc.append(&self.blstm.flush(&self.model.blstm)?)?;
        let mut up = self.upsample(&enc)?;
        up.append(&self.upsampler.flush()?)?;
        let dec = self.decode(&up)?;
        let mut post = self.postnet.push(&self.model.postnet, &dec)?;
        post.append(&self.postnet.flush(&self.model.postnet)?)?;
        let out = self.finish(&post)?;
        debug_assert!(self.pending_durations.is_empty() && self.pending_frames.is_empty());
        Ok(out)
    }

    fn upsample(&mut self, enc: &Matrix<f32>) -> Result<Matrix<f32>> {
        let d: Vec<usize> = self.pending_durations.drain(..enc.rows()).collect();
        self.upsampler.push(enc, &d, &default_sigmas(&d))
    }

    fn decode(&mut self, up: &Matrix<f32>) -> Result<Matrix<f32>> {
        let mut dec = Matrix::empty(self.model.config.frame_dim);
        for row in up.iter_rows() {
            let y = self.model.decoder_step(&mut self.dec_state, &mut self.prev_frame, row);
            self.pending_frames.push_back(y.clone());
            dec.push_row(&y)?;
        }
        if let Some(log) = &mut self.decoder_log {
            log.append(&dec)?;
        }
        Ok(dec)
    }

    fn finish(&mut self, post: &Matrix<f32>) -> Result<Matrix<f32>> {
        let mut out = Matrix::empty(self.model.config.frame_dim);
        for p in post.iter_rows() {
            let d = self.pending_frames.pop_front().expect("PostNet never runs ahead of the decoder");
            out.push_row(&residual(&d, p))?;
        }
        self.frames_out += out.rows();
        Ok(out)
    }
}
