//! The acoustic model: PnP encoder (LC-CNN stack and chunked BLSTM), Gaussian
//! upsampling, an autoregressive LSTM frame decoder and an LC-CNN PostNet
//! whose output is added to the decoder frames.

use std::path::Path;

use rand::Rng as _;

use super::config::AcousticConfig;
use crate::config::KvConfig;
use crate::layers::{
    allocate_skew, chunked_blstm_forward, default_sigmas, gaussian_upsample, Activation, Affine, BlstmWeights,
    ConvLayer, LcCnn, LstmState, LstmWeights, TensorFile,
};
use crate::rng::derived;
use crate::tensor::Matrix;
use crate::textdata::phones::{PnpToken, NUM_PHONES, NUM_PNP_SYMBOLS, PROSODY_DIM};
use crate::{Error, Limit, Result};

/// Tensor names and shapes, with the fan-in used for random init.
fn layout(cfg: &AcousticConfig) -> Vec<(String, usize, usize, usize)> {
    let ch = cfg.channels;
    let mut v = vec![
        ("in.symbol".to_string(), NUM_PNP_SYMBOLS, ch, 1),
        ("in.prosody.w".into(), PROSODY_DIM, ch, PROSODY_DIM),
        ("in.prosody.b".into(), 1, ch, PROSODY_DIM),
    ];
    for l in 0..cfg.encoder_layers {
        let fan = cfg.encoder_kernel * ch;
        v.push((format!("enc.{l}.taps"), fan, ch, fan));
        v.push((format!("enc.{l}.bias"), 1, ch, fan));
    }
    let bh = cfg.blstm_hidden;
    for dir in ["fwd", "bwd"] {
        v.push((format!("blstm.{dir}.wx"), ch, 4 * bh, ch));
        v.push((format!("blstm.{dir}.wh"), bh, 4 * bh, bh));
        v.push((format!("blstm.{dir}.b"), 1, 4 * bh, bh));
    }
    let dec_in = 2 * bh + cfg.frame_dim;
    let dw = cfg.decoder_width;
    v.push(("dec.wx".into(), dec_in, 4 * dw, dec_in));
    v.push(("dec.wh".into(), dw, 4 * dw, dw));
    v.push(("dec.b".into(), 1, 4 * dw, dw));
    v.push(("dec.out.w".into(), dw, cfg.frame_dim, dw));
    v.push(("dec.out.b".into(), 1, cfg.frame_dim, dw));
    for l in 0..cfg.postnet_layers {
        let cin = if l == 0 { cfg.frame_dim } else { cfg.postnet_channels };
        let cout = if l + 1 == cfg.postnet_layers { cfg.frame_dim } else { cfg.postnet_channels };
        let fan = cfg.postnet_kernel * cin;
        v.push((format!("post.{l}.taps"), fan, cout, fan));
        v.push((format!("post.{l}.bias"), 1, cout, fan));
    }
    v
}

/// Signed log compression of raw prosody values (frames, Hz, log-energy) so
/// that they enter the encoder at a scale comparable to the embeddings.
fn squash(v: f32) -> f32 {
    v.signum() * v.abs().ln_1p()
}

#[derive(Clone, Debug)]
pub struct AcousticModel {
    pub config: AcousticConfig,
    pub(crate) symbol: Matrix<f32>,
    pub(crate) prosody: Affine,
    pub(crate) encoder: LcCnn,
    pub(crate) blstm: BlstmWeights,
    pub(crate) decoder: LstmWeights,
    pub(crate) dec_out: Affine,
    pub(crate) postnet: LcCnn,
}

/// Offline result with the intermediate stages kept for inspection.
#[derive(Clone, Debug, PartialEq)]
pub struct AcousticOutput {
    /// Final frames: decoder output plus PostNet residual.
    pub frames: Matrix<f32>,
    /// Decoder frames before the PostNet.
    pub decoder: Matrix<f32>,
    /// Per-token encoder output (after the BLSTM).
    pub encoded: Matrix<f32>,
    /// Frame count of each input token.
    pub durations: Vec<usize>,
}

impl AcousticOutput {
    /// First frame of each token (tokens own `durations[i]` frames from here).
    pub fn frame_starts(&self) -> Vec<usize> {
        let mut s = 0;
        self.durations
            .iter()
            .map(|&d| {
                let here = s;
                s += d;
                here
            })
            .collect()
    }
}

/// Frame counts of a PnP sequence; every phone must own at least one frame.
pub fn token_durations(tokens: &[PnpToken]) -> Result<Vec<usize>> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.symbol >= NUM_PNP_SYMBOLS {
                Err(Error::Invalid(format!("token {i}: symbol {} out of range", t.symbol)))
            } else if t.symbol < NUM_PHONES && t.frames == 0 {
                Err(Error::Invalid(format!("token {i}: phone with zero frames")))
            } else {
                Ok(t.frames)
            }
        })
        .collect()
}

impl AcousticModel {
    /// Seeded random weights, uniform in `±1/sqrt(fan_in)`.
    pub fn random(config: &AcousticConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = derived(seed, "acoustic-init");
        let mut tf = TensorFile::new();
        for (name, r, c, fan) in layout(config) {
            let a = 1.0 / (fan as f32).sqrt();
            let data = (0..r * c).map(|_| rng.random_range(-a..a)).collect();
            tf.insert(name, Matrix::from_vec(r, c, data)?)?;
        }
        Self::from_tensor_file(config, &tf)
    }

    pub fn zeros(config: &AcousticConfig) -> Result<Self> {
        config.validate()?;
        let mut tf = TensorFile::new();
        for (name, r, c, _) in layout(config) {
            tf.insert(name, Matrix::zeros(r, c))?;
        }
        Self::from_tensor_file(config, &tf)
    }

    pub fn from_tensor_file(config: &AcousticConfig, tf: &TensorFile) -> Result<Self> {
        config.validate()?;
        for (name, r, c, _) in layout(config) {
            tf.get_shaped(&name, r, c)?;
        }
        if tf.len() != layout(config).len() {
            return Err(Error::format("acoustic weights", "unexpected extra tensors"));
        }
        let m = |n: &str| tf.get(n).cloned();
        let row = |n: &str| tf.get(n).map(|t| t.row(0).to_vec());
        let lstm = |p: &str| -> Result<LstmWeights> {
            LstmWeights::new(m(&format!("{p}.wx"))?, m(&format!("{p}.wh"))?, row(&format!("{p}.b"))?)
        };
        let stack = |p: &str, n: usize, k: usize, budget: usize, last: Activation| -> Result<LcCnn> {
            let layers = (0..n)
                .map(|l| {
                    let act = if l + 1 == n { last } else { Activation::Tanh };
                    ConvLayer::new(m(&format!("{p}.{l}.taps"))?, k, Some(row(&format!("{p}.{l}.bias"))?), act)
                })
                .collect::<Result<Vec<_>>>()?;
            LcCnn::new(layers, allocate_skew(&vec![k; n], budget)?)
        };
        Ok(Self {
            config: config.clone(),
            symbol: m("in.symbol")?,
            prosody: Affine::new(m("in.prosody.w")?, row("in.prosody.b")?)?,
            encoder: stack(
                "enc",
                config.encoder_layers,
                config.encoder_kernel,
                config.encoder_layers * config.encoder_lookahead,
                Activation::Tanh,
            )?,
            blstm: BlstmWeights {
                forward: lstm("blstm.fwd")?,
                backward: lstm("blstm.bwd")?,
            },
            decoder: lstm("dec")?,
            dec_out: Affine::new(m("dec.out.w")?, row("dec.out.b")?)?,
            postnet: stack(
                "post",
                config.postnet_layers,
                config.postnet_kernel,
                config.postnet_lookahead,
                Activation::Identity,
            )?,
        })
    }

    pub fn to_tensor_file(&self) -> TensorFile {
        let mut tf = TensorFile::new();
        let mut put = |n: String, m: Matrix<f32>| tf.insert(n, m).expect("distinct tensor names");
        let row = |v: &[f32]| Matrix::from_vec(1, v.len(), v.to_vec()).expect("row shape");
        put("in.symbol".into(), self.symbol.clone());
        put("in.prosody.w".into(), self.prosody.weight.clone());
        put("in.prosody.b".into(), row(&self.prosody.bias));
        for (l, layer) in self.encoder.layers.iter().enumerate() {
            put(format!("enc.{l}.taps"), layer.taps.clone());
            put(format!("enc.{l}.bias"), row(layer.bias.as_deref().unwrap_or_default()));
        }
        for (dir, w) in [("fwd", &self.blstm.forward), ("bwd", &self.blstm.backward)] {
            put(format!("blstm.{dir}.wx"), w.w_x.clone());
            put(format!("blstm.{dir}.wh"), w.w_h.clone());
            put(format!("blstm.{dir}.b"), row(&w.bias));
        }
        put("dec.wx".into(), self.decoder.w_x.clone());
        put("dec.wh".into(), self.decoder.w_h.clone());
        put("dec.b".into(), row(&self.decoder.bias));
        put("dec.out.w".into(), self.dec_out.weight.clone());
        put("dec.out.b".into(), row(&self.dec_out.bias));
        for (l, layer) in self.postnet.layers.iter().enumerate() {
            put(format!("post.{l}.taps"), layer.taps.clone());
            put(format!("post.{l}.bias"), row(layer.bias.as_deref().unwrap_or_default()));
        }
        tf
    }

    /// Writes `<stem>.weights` and `<stem>.cfg`.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_tensor_file().write(path)?;
        let cfg = path.with_extension("cfg");
        std::fs::write(&cfg, self.config.to_kv().to_text()).map_err(|e| Error::io(&cfg, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let config = AcousticConfig::read(&path.with_extension("cfg"))?;
        Self::from_tensor_file(&config, &TensorFile::read(path)?)
    }

    /// The same weights run under a different streaming setup (chunk,
    /// guardband, frame format). Shape keys must agree.
    pub fn with_limits(&self, config: &AcousticConfig) -> Result<Self> {
        let shape = |c: &AcousticConfig| {
            let mut c = c.clone();
            c.blstm_chunk = Limit::Infinite;
            c.guardband = Limit::Infinite;
            c.frame_size = 0;
            c.sample_rate = 0;
            c.tokens_per_word = 0;
            c
        };
        if shape(config) != shape(&self.config) {
            return Err(Error::Config("acoustic config changes the weight shapes".into()));
        }
        Self::from_tensor_file(config, &self.to_tensor_file())
    }

    /// Encoder input row of one token.
    pub(crate) fn embed(&self, token: &PnpToken) -> Vec<f32> {
        let p: Vec<f32> = token.prosody.iter().map(|&v| squash(v)).collect();
        let mut x = self.prosody.apply_row(&p);
        for (a, &e) in x.iter_mut().zip(self.symbol.row(token.symbol)) {
            *a += e;
        }
        x
    }

    pub(crate) fn embed_all(&self, tokens: &[PnpToken]) -> Result<Matrix<f32>> {
        let mut x = Matrix::empty(self.config.channels);
        for t in tokens {
            x.push_row(&self.embed(t))?;
        }
        Ok(x)
    }

    pub(crate) fn decoder_start(&self) -> (LstmState, Vec<f32>) {
        (self.decoder.zero_state(), vec![0.0; self.config.frame_dim])
    }

    /// One autoregressive decoder step; `prev` is updated to the new frame.
    pub(crate) fn decoder_step(&self, state: &mut LstmState, prev: &mut Vec<f32>, upsampled: &[f32]) -> Vec<f32> {
        let mut x = upsampled.to_vec();
        x.extend_from_slice(prev);
        self.decoder.step(state, &x);
        let y = self.dec_out.apply_row(&state.h);
        prev.clone_from(&y);
        y
    }

    /// Offline synthesis over the whole sequence.
    pub fn forward(&self, tokens: &[PnpToken]) -> Result<AcousticOutput> {
        let durations = token_durations(tokens)?;
        let x = self.embed_all(tokens)?;
        let cnn = self.encoder.forward(&x)?;
        let encoded = chunked_blstm_forward(&self.blstm, &cnn, self.config.blstm_chunk)?;
        let up = gaussian_upsample(&encoded, &durations, &default_sigmas(&durations))?;
        let (mut st, mut prev) = self.decoder_start();
        let mut decoder = Matrix::empty(self.config.frame_dim);
        for row in up.iter_rows() {
            decoder.push_row(&self.decoder_step(&mut st, &mut prev, row))?;
        }
        let post = self.postnet.forward(&decoder)?;
        let mut frames = Matrix::empty(self.config.frame_dim);
        for (d, p) in decoder.iter_rows().zip(post.iter_rows()) {
            frames.push_row(&residual(d, p))?;
        }
        Ok(AcousticOutput {
            frames,
            decoder,
            encoded,
            durations,
        })
    }
}

pub(crate) fn residual(dec: &[f32], post: &[f32]) -> Vec<f32> {
    dec.iter().zip(post).map(|(a, b)| a + b).collect()
}

/// Reads a config file with `key=value` overrides applied on top.
pub fn config_with_overrides(path: Option<&Path>, overrides: &[String]) -> Result<AcousticConfig> {
    let mut kv = match path {
        Some(p) => KvConfig::read(p)?,
        None => KvConfig::new(),
    };
    for o in overrides {
        kv.apply_override(o)?;
    }
    kv.check_known(super::config::ACOUSTIC_KEYS)?;
    AcousticConfig::from_kv(&kv)
}
