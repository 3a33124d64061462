//! Seeded random parameter sets that ship with the crate, so that the
//! causality and equivalence checks run without any training.

use std::path::{Path, PathBuf};

use crate::llm2pnp::{PnpModel, PnpModelConfig};
use crate::pnp2speech::{AcousticConfig, AcousticModel};
use crate::textdata::{gen_corpus, Vocab};
use crate::{Error, Result};

pub const FIXTURE_SEED: u64 = 20_240_611;
/// Paragraphs whose word pieces make up the fixture vocabulary.
pub const FIXTURE_CORPUS: usize = 400;

pub const PNP_WEIGHTS: &str = "pnp_fixture.weights";
pub const ACOUSTIC_WEIGHTS: &str = "acoustic_fixture.weights";
pub const VOCAB_FILE: &str = "tokens.txt";

pub struct Fixtures {
    pub model: PnpModel<f32>,
    pub acoustic: AcousticModel,
    pub vocab: Vocab,
}

/// Directory holding the shipped fixture files.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_vocab() -> Result<Vocab> {
    let corpus = gen_corpus(FIXTURE_SEED, FIXTURE_CORPUS)?;
    Ok(Vocab::build(corpus.iter().flat_map(|p| p.words()).map(String::as_str)))
}

/// Builds the fixtures from their seeds.
pub fn generate() -> Result<Fixtures> {
    let vocab = fixture_vocab()?;
    Ok(Fixtures {
        model: PnpModel::random_fixture(PnpModelConfig::micro(vocab.len()), FIXTURE_SEED)?,
        acoustic: AcousticModel::random(&AcousticConfig::default(), FIXTURE_SEED)?,
        vocab,
    })
}

pub fn write(fixtures: &Fixtures, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    fixtures.model.save(&dir.join(PNP_WEIGHTS))?;
    fixtures.acoustic.save(&dir.join(ACOUSTIC_WEIGHTS))?;
    let v = dir.join(VOCAB_FILE);
    std::fs::write(&v, fixtures.vocab.listing()).map_err(|e| Error::io(&v, e))
}

pub fn load(dir: &Path) -> Result<Fixtures> {
    let v = dir.join(VOCAB_FILE);
    let text = std::fs::read_to_string(&v).map_err(|e| Error::io(&v, e))?;
    Ok(Fixtures {
        model: PnpModel::load(&dir.join(PNP_WEIGHTS))?,
        acoustic: AcousticModel::load(&dir.join(ACOUSTIC_WEIGHTS))?,
        vocab: Vocab::parse_listing(&text)?,
    })
}

/// The shipped fixtures, regenerated from seeds if the files are missing.
pub fn load_or_generate() -> Result<Fixtures> {
    let dir = fixtures_dir();
    if dir.join(PNP_WEIGHTS).exists() {
        load(&dir)
    } else {
        generate()
    }
}

/// `(context, words)` pairs drawn from generated paragraphs: the first
/// sentence is context, each later sentence one text.
pub fn random_sentences(seed: u64, n: usize) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    while out.len() < n {
        for p in gen_corpus(seed.wrapping_add(k), 32)? {
            for s in p.sentences.iter().skip(1) {
                if out.len() < n {
                    out.push((p.sentences[0].clone(), s.clone()));
                }
            }
        }
        k += 1;
    }
    Ok(out)
}
