use std::path::Path;

use crate::config::KvConfig;
use crate::{Error, Limit, Result};

/// Shape, streaming limits and output format of the acoustic model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AcousticConfig {
    /// Samples per frame.
    pub frame_size: usize,
    pub sample_rate: usize,
    /// Width of the phone encoder.
    pub channels: usize,
    pub encoder_layers: usize,
    pub encoder_kernel: usize,
    /// Right extent of each encoder convolution, in PnP tokens.
    pub encoder_lookahead: usize,
    /// Hidden size of each BLSTM direction.
    pub blstm_hidden: usize,
    pub blstm_chunk: Limit,
    /// Upsampler guardband, in phones.
    pub guardband: Limit,
    pub decoder_width: usize,
    pub postnet_layers: usize,
    pub postnet_kernel: usize,
    pub postnet_channels: usize,
    /// Total right extent of the PostNet stack, in frames.
    pub postnet_lookahead: usize,
    /// Output frame dimension `M`.
    pub frame_dim: usize,
    /// Tokens counted as one word when converting delays to words.
    pub tokens_per_word: usize,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        Self {
            frame_size: 256,
            sample_rate: 22050,
            channels: 32,
            encoder_layers: 3,
            encoder_kernel: 5,
            encoder_lookahead: 2,
            blstm_hidden: 16,
            blstm_chunk: Limit::Finite(4),
            guardband: Limit::Finite(2),
            decoder_width: 32,
            postnet_layers: 5,
            postnet_kernel: 5,
            postnet_channels: 32,
            postnet_lookahead: 2,
            frame_dim: 16,
            tokens_per_word: 8,
        }
    }
}

pub const ACOUSTIC_KEYS: &[&str] = &[
    "frame_size",
    "sample_rate",
    "channels",
    "encoder_layers",
    "encoder_kernel",
    "encoder_lookahead",
    "blstm_hidden",
    "blstm_chunk",
    "guardband",
    "decoder_width",
    "postnet_layers",
    "postnet_kernel",
    "postnet_channels",
    "postnet_lookahead",
    "frame_dim",
    "tokens_per_word",
];

impl AcousticConfig {
    pub fn encoder_kernels(&self) -> Vec<usize> {
        vec![self.encoder_kernel; self.encoder_layers]
    }

    pub fn postnet_kernels(&self) -> Vec<usize> {
        vec![self.postnet_kernel; self.postnet_layers]
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frame_size", self.frame_size),
            ("sample_rate", self.sample_rate),
            ("channels", self.channels),
            ("encoder_layers", self.encoder_layers),
            ("encoder_kernel", self.encoder_kernel),
            ("blstm_hidden", self.blstm_hidden),
            ("decoder_width", self.decoder_width),
            ("postnet_layers", self.postnet_layers),
            ("postnet_kernel", self.postnet_kernel),
            ("postnet_channels", self.postnet_channels),
            ("frame_dim", self.frame_dim),
            ("tokens_per_word", self.tokens_per_word),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{k} must be positive")));
        }
        for (k, w) in [("encoder_kernel", self.encoder_kernel), ("postnet_kernel", self.postnet_kernel)] {
            if w % 2 == 0 {
                return Err(Error::Config(format!("{k} must be odd, got {w}")));
            }
        }
        if self.encoder_lookahead > (self.encoder_kernel - 1) / 2 {
            return Err(Error::Config(format!(
                "encoder_lookahead {} exceeds the half-width of kernel {}",
                self.encoder_lookahead, self.encoder_kernel
            )));
        }
        let post_max = self.postnet_layers * (self.postnet_kernel - 1) / 2;
        if self.postnet_lookahead > post_max {
            return Err(Error::Config(format!(
                "postnet_lookahead {} exceeds the symmetric maximum {post_max}",
                self.postnet_lookahead
            )));
        }
        if self.blstm_chunk == Limit::Finite(0) {
            return Err(Error::Config("blstm_chunk must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let d = Self::default();
        let c = Self {
            frame_size: cfg.get_or("frame_size", d.frame_size)?,
            sample_rate: cfg.get_or("sample_rate", d.sample_rate)?,
            channels: cfg.get_or("channels", d.channels)?,
            encoder_layers: cfg.get_or("encoder_layers", d.encoder_layers)?,
            encoder_kernel: cfg.get_or("encoder_kernel", d.encoder_kernel)?,
            encoder_lookahead: cfg.get_or("encoder_lookahead", d.encoder_lookahead)?,
            blstm_hidden: cfg.get_or("blstm_hidden", d.blstm_hidden)?,
            blstm_chunk: cfg.get_or("blstm_chunk", d.blstm_chunk)?,
            guardband: cfg.get_or("guardband", d.guardband)?,
            decoder_width: cfg.get_or("decoder_width", d.decoder_width)?,
            postnet_layers: cfg.get_or("postnet_layers", d.postnet_layers)?,
            postnet_kernel: cfg.get_or("postnet_kernel", d.postnet_kernel)?,
            postnet_channels: cfg.get_or("postnet_channels", d.postnet_channels)?,
            postnet_lookahead: cfg.get_or("postnet_lookahead", d.postnet_lookahead)?,
            frame_dim: cfg.get_or("frame_dim", d.frame_dim)?,
            tokens_per_word: cfg.get_or("tokens_per_word", d.tokens_per_word)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::new();
        kv.set("frame_size", self.frame_size);
        kv.set("sample_rate", self.sample_rate);
        kv.set("channels", self.channels);
        kv.set("encoder_layers", self.encoder_layers);
        kv.set("encoder_kernel", self.encoder_kernel);
        kv.set("encoder_lookahead", self.encoder_lookahead);
        kv.set("blstm_hidden", self.blstm_hidden);
        kv.set("blstm_chunk", self.blstm_chunk);
        kv.set("guardband", self.guardband);
        kv.set("decoder_width", self.decoder_width);
        kv.set("postnet_layers", self.postnet_layers);
        kv.set("postnet_kernel", self.postnet_kernel);
        kv.set("postnet_channels", self.postnet_channels);
        kv.set("postnet_lookahead", self.postnet_lookahead);
        kv.set("frame_dim", self.frame_dim);
        kv.set("tokens_per_word", self.tokens_per_word);
        kv
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = KvConfig::read(path)?;
        kv.check_known(ACOUSTIC_KEYS)?;
        Self::from_kv(&kv)
    }
}
