//! Seeded random PnP sequences for exercising the acoustic model without a
//! trained predictor.

use rand::Rng as _;

use crate::rng::derived;
use crate::textdata::phones::{
    is_vowel, prosody_index as pi, PhraseType, PnpToken, ProsodyVector, NUM_PHONES, SEP_INNER, SEP_REGULAR,
};

/// `len` tokens shaped like predictor output: words of one to five phones
/// separated by regular (occasionally inner) separators. Vowels last 4 to 12
/// frames, consonants 2 to 6; separators own no frames.
pub fn random_pnp(seed: u64, len: usize) -> Vec<PnpToken> {
    let mut rng = derived(seed, "random-pnp");
    let phrase = PhraseType::from_id(rng.random_range(0..4)).expect("four phrase types");
    let sentence_pitch = rng.random_range(95.0..135.0f32);
    let mut out = Vec::with_capacity(len);
    let mut word = 0;
    let mut left_in_word = rng.random_range(1..=5);
    while out.len() < len {
        let mut prosody: ProsodyVector = [0.0; 9];
        prosody[pi::SENTENCE + pi::DURATION] = 40.0;
        prosody[pi::SENTENCE + pi::PITCH] = sentence_pitch;
        prosody[pi::SENTENCE + pi::ENERGY] = 2.0;
        prosody[pi::WORD + pi::DURATION] = 20.0;
        prosody[pi::WORD + pi::PITCH] = sentence_pitch - 2.0 * word as f32;
        prosody[pi::WORD + pi::ENERGY] = 2.0;
        let (symbol, frames) = if left_in_word == 0 {
            left_in_word = rng.random_range(1..=5);
            let sep = if rng.random_bool(0.1) { SEP_INNER } else { SEP_REGULAR };
            (sep, 0)
        } else {
            left_in_word -= 1;
            let s = rng.random_range(0..NUM_PHONES);
            let f = if is_vowel(s) { rng.random_range(4..=12) } else { rng.random_range(2..=6) };
            prosody[pi::PHONE + pi::DURATION] = f as f32;
            prosody[pi::PHONE + pi::PITCH] = prosody[pi::WORD + pi::PITCH] + rng.random_range(-4.0..4.0f32);
            prosody[pi::PHONE + pi::ENERGY] = (1.0 + f as f32).ln() + if is_vowel(s) { 0.5 } else { 0.0 };
            (s, f)
        };
        out.push(PnpToken {
            symbol,
            prosody,
            frames,
            phrase,
            word_index: word,
        });
        if symbol == SEP_REGULAR {
            word += 1;
        }
    }
    out
}
