use std::path::Path;

use crate::config::KvConfig;
use crate::textdata::embed::{DEFAULT_LAYER_IDS, EMBED_DIM};
use crate::{Error, Limit, Result};

/// Shape and lookahead of the phone-and-prosody predictor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnpModelConfig {
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub width: usize,
    pub ff_width: usize,
    pub heads: usize,
    /// Word lookahead `L` used for training and, by default, decoding.
    pub lookahead: Limit,
    /// Language-model layers whose vectors feed the encoder; empty disables
    /// the embedding input altogether.
    pub layer_ids: Vec<usize>,
    /// Per-layer embedding dimension `E`.
    pub embed_dim: usize,
    pub vocab_size: usize,
}

pub const CONFIG_KEYS: &[&str] = &[
    "encoder_layers",
    "decoder_layers",
    "width",
    "ff_width",
    "heads",
    "lookahead",
    "layer_ids",
    "embed_dim",
    "vocab_size",
];

impl PnpModelConfig {
    /// Desk-scale default: 2/2 layers, width 32, feed-forward 64, 2 heads, L = 1.
    pub fn micro(vocab_size: usize) -> Self {
        Self {
            encoder_layers: 2,
            decoder_layers: 2,
            width: 32,
            ff_width: 64,
            heads: 2,
            lookahead: Limit::Finite(1),
            layer_ids: DEFAULT_LAYER_IDS.to_vec(),
            embed_dim: EMBED_DIM,
            vocab_size,
        }
    }

    /// Full-size shape: 4 encoder and 6 decoder layers, widths 512/768, 4 heads.
    pub fn full_scale(vocab_size: usize) -> Self {
        Self {
            encoder_layers: 4,
            decoder_layers: 6,
            width: 512,
            ff_width: 768,
            heads: 4,
            ..Self::micro(vocab_size)
        }
    }

    pub fn uses_embeddings(&self) -> bool {
        !self.layer_ids.is_empty()
    }

    /// Width of the concatenated embedding input.
    pub fn embedding_input_width(&self) -> usize {
        self.layer_ids.len() * self.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("encoder_layers", self.encoder_layers),
            ("decoder_layers", self.decoder_layers),
            ("width", self.width),
            ("ff_width", self.ff_width),
            ("heads", self.heads),
            ("embed_dim", self.embed_dim),
            ("vocab_size", self.vocab_size),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{k} must be positive")));
        }
        if self.width % self.heads != 0 {
            return Err(Error::Config(format!("width {} not divisible by {} heads", self.width, self.heads)));
        }
        Ok(())
    }

    /// Reads keys from `cfg`, falling back to the micro defaults.
    pub fn from_kv(cfg: &KvConfig) -> Result<Self> {
        let d = Self::micro(cfg.get_or("vocab_size", 1)?);
        let layer_ids = match cfg.raw("layer_ids") {
            Some("none") | Some("") => Vec::new(),
            Some(_) => cfg.get_list("layer_ids")?.unwrap_or_default(),
            None => d.layer_ids.clone(),
        };
        let c = Self {
            encoder_layers: cfg.get_or("encoder_layers", d.encoder_layers)?,
            decoder_layers: cfg.get_or("decoder_layers", d.decoder_layers)?,
            width: cfg.get_or("width", d.width)?,
            ff_width: cfg.get_or("ff_width", d.ff_width)?,
            heads: cfg.get_or("heads", d.heads)?,
            lookahead: cfg.get_or("lookahead", d.lookahead)?,
            layer_ids,
            embed_dim: cfg.get_or("embed_dim", d.embed_dim)?,
            vocab_size: d.vocab_size,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::new();
        kv.set("encoder_layers", self.encoder_layers);
        kv.set("decoder_layers", self.decoder_layers);
        kv.set("width", self.width);
        kv.set("ff_width", self.ff_width);
        kv.set("heads", self.heads);
        kv.set("lookahead", self.lookahead);
        let ids: Vec<String> = self.layer_ids.iter().map(ToString::to_string).collect();
        kv.set("layer_ids", if ids.is_empty() { "none".to_string() } else { ids.join(",") });
        kv.set("embed_dim", self.embed_dim);
        kv.set("vocab_size", self.vocab_size);
        kv
    }

    pub fn read(path: &Path) -> Result<Self> {
        let kv = KvConfig::read(path)?;
        kv.check_known(CONFIG_KEYS)?;
        Self::from_kv(&kv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip_and_validation() {
        let mut c = PnpModelConfig::micro(50);
        c.lookahead = Limit::Infinite;
        assert_eq!(PnpModelConfig::from_kv(&c.to_kv()).unwrap(), c);
        c.layer_ids.clear();
        assert_eq!(PnpModelConfig::from_kv(&c.to_kv()).unwrap(), c);
        let full = PnpModelConfig::full_scale(50);
        assert_eq!((full.encoder_layers, full.decoder_layers, full.width, full.ff_width, full.heads), (4, 6, 512, 768, 4));
        assert_eq!(full.lookahead, Limit::Finite(1));
        c.heads = 3;
        assert!(c.validate().is_err());
    }
}
