//! Python bindings: delay accounting, skew allocation and the streaming
//! pipeline on the shipped fixtures or trained weights.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pnpstream::config::KvConfig;
use pnpstream::layers::allocate_skew as skew;
use pnpstream::llm2pnp::PnpModel;
use pnpstream::pnp2speech::{delay_accounting, AcousticConfig, AcousticModel};
use pnpstream::runtime::{fixtures, split_text, Pipeline as RsPipeline, StreamOptions};
use pnpstream::textdata::phones::symbol_name;
use pnpstream::textdata::{gen_corpus as rs_gen_corpus, HashEmbedder, Vocab};
use pnpstream::{Error, Limit};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Invalid(_) | Error::Shape(_) | Error::Empty(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn limit(v: Option<&str>, default: Limit) -> PyResult<Limit> {
    v.map_or(Ok(default), |s| s.parse::<Limit>().map_err(|e| PyValueError::new_err(format!("lookahead {s:?}: {e}"))))
}

/// `key=value` text to a dict of strings.
fn kv_dict(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Right extents chosen for `kernels` under a total right budget.
#[pyfunction]
fn allocate_skew(kernels: Vec<usize>, budget: usize) -> PyResult<Vec<usize>> {
    Ok(skew(&kernels, budget).map_err(py_err)?.right().to_vec())
}

/// Delay accounting of the acoustic model; `config` overrides default keys.
#[pyfunction]
#[pyo3(signature = (config = None, lookahead = "1"))]
fn delay_report(config: Option<BTreeMap<String, String>>, lookahead: &str) -> PyResult<BTreeMap<String, String>> {
    let mut kv = KvConfig::new();
    for (k, v) in config.unwrap_or_default() {
        kv.set(&k, v);
    }
    kv.check_known(pnpstream::pnp2speech::ACOUSTIC_KEYS).map_err(py_err)?;
    let cfg = AcousticConfig::from_kv(&kv).map_err(py_err)?;
    let report = delay_accounting(&cfg).map_err(py_err)?;
    let mut out = kv_dict(&report.to_kv_text(limit(Some(lookahead), Limit::Finite(1))?));
    out.insert("headline".into(), report.headline());
    Ok(out)
}

/// Sentences (lists of words) of each generated paragraph.
#[pyfunction]
fn gen_corpus(seed: u64, paragraphs: usize) -> PyResult<Vec<Vec<Vec<String>>>> {
    Ok(rs_gen_corpus(seed, paragraphs).map_err(py_err)?.into_iter().map(|p| p.sentences).collect())
}

/// Outcome of one streaming run.
#[pyclass(frozen)]
struct StreamResult {
    /// `(symbol, word_index, frames)` per PnP token.
    #[pyo3(get)]
    pnp: Vec<(String, usize, usize)>,
    /// Acoustic frames, one list per frame.
    #[pyo3(get)]
    frames: Vec<Vec<f32>>,
    #[pyo3(get)]
    trace_csv: String,
    #[pyo3(get)]
    time_to_first_pnp: Option<u64>,
    #[pyo3(get)]
    time_to_first_frame: Option<u64>,
}

#[pymethods]
impl StreamResult {
    fn __repr__(&self) -> String {
        format!(
            "StreamResult(pnp={}, frames={}, first_pnp_ms={:?}, first_frame_ms={:?})",
            self.pnp.len(),
            self.frames.len(),
            self.time_to_first_pnp,
            self.time_to_first_frame
        )
    }
}

/// Predictor, acoustic model and vocabulary. Paths left out fall back to
/// the shipped random fixtures.
#[pyclass]
struct Pipeline {
    model: PnpModel<f32>,
    acoustic: AcousticModel,
    vocab: Vocab,
    provider: HashEmbedder,
}

impl Pipeline {
    fn rs(&self) -> RsPipeline<'_> {
        RsPipeline {
            model: &self.model,
            acoustic: &self.acoustic,
            vocab: &self.vocab,
            provider: &self.provider,
        }
    }
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (model = None, acoustic = None, vocab = None))]
    fn new(model: Option<PathBuf>, acoustic: Option<PathBuf>, vocab: Option<PathBuf>) -> PyResult<Self> {
        let fx = fixtures::load_or_generate().map_err(py_err)?;
        let vocab_path = vocab.or_else(|| model.as_ref().map(|m| m.with_file_name(fixtures::VOCAB_FILE)));
        let vocab = match vocab_path {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| py_err(Error::io(&p, e)))?;
                Vocab::parse_listing(&text).map_err(py_err)?
            }
            None => fx.vocab,
        };
        Ok(Self {
            model: match model {
                Some(p) => PnpModel::load(&p).map_err(py_err)?,
                None => fx.model,
            },
            acoustic: match acoustic {
                Some(p) => AcousticModel::load(&p).map_err(py_err)?,
                None => fx.acoustic,
            },
            vocab,
            provider: HashEmbedder::default(),
        })
    }

    /// Word lookahead the predictor was trained with.
    #[getter]
    fn lookahead(&self) -> String {
        self.model.config.lookahead.to_string()
    }

    #[pyo3(signature = (text, context = "", lookahead = None, inter_arrival_ms = 200))]
    fn stream(&self, py: Python<'_>, text: &str, context: &str, lookahead: Option<&str>, inter_arrival_ms: u64) -> PyResult<StreamResult> {
        let l = limit(lookahead, self.model.config.lookahead)?;
        let (ctx, words) = (split_text(context), split_text(text));
        let run = py
            .detach(|| self.rs().stream(&ctx, &words, inter_arrival_ms, &StreamOptions::new(l)))
            .map_err(py_err)?;
        Ok(StreamResult {
            pnp: run.pnp.iter().map(|t| (symbol_name(t.symbol).to_string(), t.word_index, t.frames)).collect(),
            frames: (0..run.frames.rows()).map(|t| run.frames.row(t).to_vec()).collect(),
            trace_csv: run.trace.to_csv().map_err(py_err)?,
            time_to_first_pnp: run.trace.time_to_first_pnp(),
            time_to_first_frame: run.trace.time_to_first_frame(),
        })
    }

    /// Streaming versus offline comparison of one text, as a dict.
    #[pyo3(signature = (text, context = "", lookahead = None, tolerance = None))]
    fn check_equivalence(
        &self,
        py: Python<'_>,
        text: &str,
        context: &str,
        lookahead: Option<&str>,
        tolerance: Option<f64>,
    ) -> PyResult<BTreeMap<String, String>> {
        let l = limit(lookahead, self.model.config.lookahead)?;
        let (ctx, words) = (split_text(context), split_text(text));
        let report = py
            .detach(|| self.rs().check_equivalence(&ctx, &words, l, tolerance, None))
            .map_err(py_err)?;
        Ok(kv_dict(&report.to_kv_text()))
    }
}

#[pymodule]
#[pyo3(name = "pnpstream")]
fn pnpstream_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(allocate_skew, m)?)?;
    m.add_function(wrap_pyfunction!(delay_report, m)?)?;
    m.add_function(wrap_pyfunction!(gen_corpus, m)?)?;
    m.add_class::<Pipeline>()?;
    m.add_class::<StreamResult>()?;
    Ok(())
}
