use rand::Rng as _;

use super::*;
use crate::rng::seeded;
use crate::Limit;

fn stream_all(model: &AcousticModel, tokens: &[crate::textdata::PnpToken], batch: usize) -> crate::Matrix<f32> {
    let mut s = AcousticStream::new(model).unwrap();
    let mut out = crate::Matrix::empty(model.config.frame_dim);
    for chunk in tokens.chunks(batch.max(1)) {
        out.append(&s.push(chunk).unwrap()).unwrap();
    }
    out.append(&s.flush().unwrap()).unwrap();
    assert!(s.push(&tokens[..1]).is_err());
    assert_eq!(s.buffered(), 0);
    out
}

#[test]
fn zero_weights_give_zero_frames_of_the_right_count() {
    let m = AcousticModel::zeros(&AcousticConfig::default()).unwrap();
    let toks = random_pnp(1, 20);
    let out = m.forward(&toks).unwrap();
    assert_eq!(out.frames.rows(), toks.iter().map(|t| t.frames).sum::<usize>());
    assert!(out.frames.as_slice().iter().all(|&v| v == 0.0));
    assert!(m.forward(&[]).unwrap().frames.is_empty());
}

#[test]
fn frame_count_is_conserved() {
    let m = AcousticModel::random(&AcousticConfig::default(), 3).unwrap();
    for seed in 0..10 {
        let toks = random_pnp(seed, 3 + seed as usize * 5);
        let want: usize = toks.iter().map(|t| t.frames).sum();
        assert_eq!(m.forward(&toks).unwrap().frames.rows(), want);
        assert_eq!(stream_all(&m, &toks, 3).rows(), want);
    }
}

#[test]
fn zero_frame_phones_are_rejected() {
    let m = AcousticModel::random(&AcousticConfig::default(), 3).unwrap();
    let mut toks = random_pnp(2, 6);
    let p = toks.iter().position(|t| t.is_phone()).unwrap();
    toks[p].frames = 0;
    assert!(m.forward(&toks).is_err());
}

#[test]
fn unbounded_stream_matches_offline() {
    let cfg = AcousticConfig {
        guardband: Limit::Infinite,
        ..AcousticConfig::default()
    };
    let m = AcousticModel::random(&cfg, 5).unwrap();
    let mut rng = seeded(5);
    for seed in 0..10 {
        let toks = random_pnp(seed, rng.random_range(3..60));
        let off = m.forward(&toks).unwrap().frames;
        for batch in [1, 4, 100] {
            let on = stream_all(&m, &toks, batch);
            assert!(on.max_abs_diff(&off).unwrap() <= 1e-6);
        }
    }
    let all = AcousticModel::random(&AcousticConfig { blstm_chunk: Limit::Infinite, ..cfg }, 5).unwrap();
    let toks = random_pnp(77, 30);
    assert_eq!(stream_all(&all, &toks, 2), all.forward(&toks).unwrap().frames);
}

#[test]
fn guardband_stream_is_close_to_offline() {
    let m = AcousticModel::random(&AcousticConfig::default(), 6).unwrap();
    let mut worst = 0.0f32;
    for seed in 0..20 {
        let toks = random_pnp(100 + seed, 3 + (seed as usize * 7) % 58);
        let off = m.forward(&toks).unwrap().frames;
        let on = stream_all(&m, &toks, 1);
        worst = worst.max(on.max_abs_diff(&off).unwrap());
    }
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn one_token_emits_nothing_and_first_emission_matches_prediction() {
    let mut rng = seeded(9);
    for trial in 0..30 {
        let cfg = AcousticConfig {
            encoder_layers: rng.random_range(1..4),
            encoder_lookahead: rng.random_range(0..3),
            blstm_chunk: Limit::Finite(rng.random_range(1..6)),
            guardband: Limit::Finite(rng.random_range(0..4)),
            postnet_layers: rng.random_range(1..6),
            postnet_lookahead: rng.random_range(0..3),
            channels: 8,
            blstm_hidden: 4,
            decoder_width: 8,
            postnet_channels: 8,
            frame_dim: 4,
            ..AcousticConfig::default()
        };
        let m = AcousticModel::random(&cfg, trial).unwrap();
        let toks = random_pnp(trial, rng.random_range(3..40));
        let d = token_durations(&toks).unwrap();
        let mut s = AcousticStream::new(&m).unwrap();
        let mut measured = None;
        for (i, t) in toks.iter().enumerate() {
            if s.push(std::slice::from_ref(t)).unwrap().rows() > 0 {
                measured = Some(i + 1);
                break;
            }
        }
        assert_eq!(measured, predict_first_emission(&cfg, &d).unwrap(), "trial {trial}");
    }
    let m = AcousticModel::random(&AcousticConfig::default(), 1).unwrap();
    let mut s = AcousticStream::new(&m).unwrap();
    assert_eq!(s.push(&random_pnp(3, 1)).unwrap().rows(), 0);
}

/// Smallest offset `k` such that perturbing any token at `i + k` or later
/// leaves the decoder frames of token `i` unchanged (streaming path).
fn dependence_horizon(m: &AcousticModel, toks: &[crate::textdata::PnpToken], i: usize) -> usize {
    let base = stream_decoder(m, toks);
    let starts = frame_starts(toks);
    let span = starts[i]..starts[i] + toks[i].frames;
    let mut horizon = 0;
    for j in i + 1..toks.len() {
        let mut p = toks.to_vec();
        p[j].prosody[7] += 3.0;
        p[j].symbol = (p[j].symbol + 1) % crate::textdata::phones::NUM_PHONES;
        p[j].frames = p[j].frames.max(1);
        let got = stream_decoder(m, &p);
        if span.clone().any(|t| got.row(t) != base.row(t)) {
            horizon = j - i + 1;
        }
    }
    horizon
}

fn frame_starts(toks: &[crate::textdata::PnpToken]) -> Vec<usize> {
    let mut s = 0;
    toks.iter().map(|t| { let h = s; s += t.frames; h }).collect()
}

/// Pre-PostNet frames of the streaming path.
fn stream_decoder(m: &AcousticModel, toks: &[crate::textdata::PnpToken]) -> crate::Matrix<f32> {
    let mut s = AcousticStream::new(m).unwrap().record_decoder();
    s.push(toks).unwrap();
    s.flush().unwrap();
    s.decoder_frames().unwrap().clone()
}

#[test]
fn token_lookahead_without_chunking_or_guardband_is_six() {
    let cfg = AcousticConfig {
        blstm_chunk: Limit::Finite(1),
        guardband: Limit::Finite(0),
        ..AcousticConfig::default()
    };
    let m = AcousticModel::random(&cfg, 12).unwrap();
    // phones only, so every token owns frames
    let toks: Vec<_> = random_pnp(4, 60).into_iter().filter(|t| t.is_phone()).take(30).collect();
    for i in [0, 5, 10, 20] {
        assert_eq!(dependence_horizon(&m, &toks, i), 7, "token {i}");
    }
}

#[test]
fn chunking_extends_the_horizon_to_the_chunk_end() {
    let cfg = AcousticConfig {
        guardband: Limit::Finite(0),
        ..AcousticConfig::default()
    };
    let m = AcousticModel::random(&cfg, 13).unwrap();
    let toks: Vec<_> = random_pnp(8, 60).into_iter().filter(|t| t.is_phone()).take(32).collect();
    for i in [0, 3, 9, 14] {
        let chunk_end = (i / 4 + 1) * 4 - 1;
        assert_eq!(dependence_horizon(&m, &toks, i), chunk_end + 6 - i + 1, "token {i}");
    }
}

#[test]
fn default_horizon_never_exceeds_the_composed_bound() {
    // Gaussian tails two phones away may round away in f32, so the composed
    // bound (guardband phone, its chunk end, then the encoder extent) is an
    // upper limit rather than always attained.
    let m = AcousticModel::random(&AcousticConfig::default(), 13).unwrap();
    let toks: Vec<_> = random_pnp(8, 60).into_iter().filter(|t| t.is_phone()).take(32).collect();
    for i in [0, 3, 9, 14, 20] {
        let chunk_end = ((i + 2) / 4 + 1) * 4 - 1;
        let h = dependence_horizon(&m, &toks, i);
        assert!(h >= 7 && h <= chunk_end + 6 - i + 1, "token {i}: {h}");
    }
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let m = AcousticModel::random(&AcousticConfig::default(), 21).unwrap();
    let p = dir.path().join("acoustic.weights");
    m.save(&p).unwrap();
    let back = AcousticModel::load(&p).unwrap();
    let toks = random_pnp(5, 25);
    assert_eq!(back.forward(&toks).unwrap(), m.forward(&toks).unwrap());
    let wider = AcousticConfig {
        guardband: Limit::Infinite,
        ..AcousticConfig::default()
    };
    assert!(m.with_limits(&wider).is_ok());
    let other = AcousticConfig { channels: 8, ..wider };
    assert!(m.with_limits(&other).is_err());
}
