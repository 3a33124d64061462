//! Static algorithmic-delay accounting for the acoustic model.

use std::fmt;

use super::config::AcousticConfig;
use crate::layers::allocate_skew;
use crate::{Limit, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DelayReport {
    /// Right extent of the encoder convolutions, in PnP tokens.
    pub encoder_tokens: usize,
    /// Right extent of the PostNet, in frames.
    pub postnet_frames: usize,
    /// Worst-case wait for a BLSTM chunk to complete (`chunk - 1` tokens).
    pub chunk_wait_tokens: Limit,
    /// Phones the upsampler waits for beyond a frame's owning phone.
    pub guardband_phones: Limit,
    pub tokens_per_word: usize,
}

impl DelayReport {
    /// Encoder token lookahead expressed in words, rounded up.
    pub fn acoustic_words(&self) -> usize {
        self.encoder_tokens.div_ceil(self.tokens_per_word)
    }

    /// Word lookahead of the whole pipeline: the predictor's `L` plus the
    /// acoustic encoder lookahead in words.
    pub fn total_words(&self, pnp_lookahead: Limit) -> Limit {
        match pnp_lookahead {
            Limit::Finite(l) => Limit::Finite(l + self.acoustic_words()),
            Limit::Infinite => Limit::Infinite,
        }
    }

    pub fn headline(&self) -> String {
        format!("{} PnP tokens plus {} frames", self.encoder_tokens, self.postnet_frames)
    }

    /// Machine-readable `key=value` form.
    pub fn to_kv_text(&self, pnp_lookahead: Limit) -> String {
        format!(
            "encoder_tokens={}\npostnet_frames={}\nchunk_wait_tokens={}\nguardband_phones={}\ntokens_per_word={}\nacoustic_words={}\npnp_lookahead_words={}\ntotal_words={}\n",
            self.encoder_tokens,
            self.postnet_frames,
            self.chunk_wait_tokens,
            self.guardband_phones,
            self.tokens_per_word,
            self.acoustic_words(),
            pnp_lookahead,
            self.total_words(pnp_lookahead)
        )
    }
}

impl fmt::Display for DelayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "algorithmic delay: {}", self.headline())?;
        writeln!(f, "  encoder lookahead      {} tokens (sum of per-layer right extents)", self.encoder_tokens)?;
        writeln!(f, "  postnet lookahead      {} frames (total skewed budget)", self.postnet_frames)?;
        writeln!(f, "  BLSTM chunk wait       {} tokens worst case (chunk - 1), separate item", self.chunk_wait_tokens)?;
        writeln!(f, "  upsampler guardband    {} phones, separate item", self.guardband_phones)?;
        write!(
            f,
            "  word equivalent        ceil({} / {}) = {} word(s); pipeline total = L + {}",
            self.encoder_tokens,
            self.tokens_per_word,
            self.acoustic_words(),
            self.acoustic_words()
        )
    }
}

pub fn delay_accounting(config: &AcousticConfig) -> Result<DelayReport> {
    config.validate()?;
    let enc = allocate_skew(&config.encoder_kernels(), config.encoder_layers * config.encoder_lookahead)?;
    let post = allocate_skew(&config.postnet_kernels(), config.postnet_lookahead)?;
    Ok(DelayReport {
        encoder_tokens: enc.total_right(),
        postnet_frames: post.total_right(),
        chunk_wait_tokens: match config.blstm_chunk {
            Limit::Finite(c) => Limit::Finite(c - 1),
            Limit::Infinite => Limit::Infinite,
        },
        guardband_phones: config.guardband,
        tokens_per_word: config.tokens_per_word,
    })
}

/// Tokens that must have been pushed, one at a time, before the acoustic
/// stream emits its first frame; `None` when nothing comes out before flush.
///
/// Composition: after `n` tokens the encoder has released `n - E` rows, the
/// BLSTM the largest multiple of the chunk size below that, the upsampler the
/// frames of every leading phone whose `g`-th successor phone has arrived, and
/// the PostNet all but its last `P` frames.
pub fn predict_first_emission(config: &AcousticConfig, durations: &[usize]) -> Result<Option<usize>> {
    let report = delay_accounting(config)?;
    let frames_after = |n: usize| -> usize {
        let enc = n.saturating_sub(report.encoder_tokens);
        let received = match config.blstm_chunk {
            Limit::Finite(c) => enc / c * c,
            Limit::Infinite => 0,
        };
        let Limit::Finite(g) = config.guardband else { return 0 };
        let mut frames = 0;
        for o in 0..received {
            // index of the g-th phone after o (o itself when g = 0)
            let upper = if g == 0 {
                Some(o)
            } else {
                let mut seen = 0;
                (o + 1..received).find(|&i| {
                    seen += usize::from(durations[i] > 0);
                    seen == g
                })
            };
            if upper.is_none() {
                break;
            }
            frames += durations[o];
        }
        frames
    };
    Ok((1..=durations.len()).find(|&n| frames_after(n) > report.postnet_frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_report_is_six_tokens_plus_two_frames() {
        let r = delay_accounting(&AcousticConfig::default()).unwrap();
        assert_eq!(r.encoder_tokens, 6);
        assert_eq!(r.postnet_frames, 2);
        assert_eq!(r.headline(), "6 PnP tokens plus 2 frames");
        assert_eq!(r.chunk_wait_tokens, Limit::Finite(3));
        assert_eq!(r.guardband_phones, Limit::Finite(2));
        assert_eq!(r.total_words(Limit::Finite(1)), Limit::Finite(2));
    }

    #[test]
    fn causal_and_two_layer_reports() {
        let causal = AcousticConfig {
            encoder_lookahead: 0,
            postnet_lookahead: 0,
            blstm_chunk: Limit::Finite(1),
            guardband: Limit::Finite(0),
            ..AcousticConfig::default()
        };
        let r = delay_accounting(&causal).unwrap();
        assert_eq!((r.encoder_tokens, r.postnet_frames), (0, 0));
        assert_eq!(r.chunk_wait_tokens, Limit::Finite(0));
        assert_eq!(r.acoustic_words(), 0);
        let two = AcousticConfig {
            encoder_layers: 2,
            ..AcousticConfig::default()
        };
        assert_eq!(delay_accounting(&two).unwrap().encoder_tokens, 4);
    }

    #[test]
    fn prediction_on_hand_worked_case() {
        // E=6, chunk 4, g=2, P=2, four-frame phones: the BLSTM releases 4
        // rows at n=10, phones 0 and 1 then have two successors (8 frames).
        let d = vec![4; 12];
        assert_eq!(predict_first_emission(&AcousticConfig::default(), &d).unwrap(), Some(10));
        assert_eq!(predict_first_emission(&AcousticConfig::default(), &d[..9]).unwrap(), None);
    }
}
