//! Command-line front end.
//!
//! Every subcommand reads an optional flat `key = value` file (`--config`),
//! then `--set key=value` overrides, then its typed flags. Unknown keys are a
//! usage error. Machine-readable results go to files under `out`; stdout only
//! carries human summaries.
//!
//! Exit status: 0 success, 1 failed check or runtime error, 2 usage error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pnpstream::config::KvConfig;
use pnpstream::llm2pnp::config::CONFIG_KEYS;
use pnpstream::llm2pnp::PnpModel;
use pnpstream::pnp2speech::{delay_accounting, AcousticConfig, AcousticModel, FrameFile, ACOUSTIC_KEYS};
use pnpstream::runtime::{fixtures, split_text, Pipeline, StreamOptions};
use pnpstream::textdata::dataset::{read_dataset, write_dataset};
use pnpstream::textdata::phones::symbol_name;
use pnpstream::textdata::{build_dataset_limited, gen_corpus, read_corpus, write_corpus, HashEmbedder, Vocab, DEFAULT_LAYER_IDS};
use pnpstream::trainer::{eval_wer, run_ablation, train, TrainConfig};
use pnpstream::trainer::train::TRAIN_KEYS;
use pnpstream::{Error, Limit};

#[derive(Parser)]
#[command(name = "pnpstream", version, about = "Streaming phone-and-prosody prediction and acoustic synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat key = value config file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output file or directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Model files; the shipped random fixtures fill in whatever is missing.
#[derive(Args, Clone, Default)]
struct ModelFiles {
    /// Predictor weights (vocabulary defaults to `tokens.txt` beside it)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Acoustic model weights
    #[arg(long)]
    acoustic: Option<PathBuf>,
    /// Token vocabulary listing
    #[arg(long)]
    vocab: Option<PathBuf>,
}

impl ModelFiles {
    fn flags(&self) -> [(&'static str, Option<String>); 3] {
        [
            path_flag("model", &self.model),
            path_flag("acoustic", &self.acoustic),
            path_flag("vocab", &self.vocab),
        ]
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic paragraph corpus (JSON lines)
    GenCorpus {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        paragraphs: Option<usize>,
    },
    /// Build train/validation samples with teacher labels and embeddings
    BuildDataset {
        #[command(flatten)]
        common: Common,
        /// Corpus file from gen-corpus; generated from seed when absent
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        paragraphs: Option<usize>,
        #[arg(long)]
        max_train: Option<usize>,
        /// Comma-separated layer ids, or `none`
        #[arg(long)]
        layer_ids: Option<String>,
    },
    /// Train the phone-and-prosody predictor
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset directory from build-dataset
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        lookahead: Option<Limit>,
    },
    /// Word error rates of a trained predictor on the validation split
    EvalG2p {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Weights file written by train
        #[arg(long)]
        model: Option<PathBuf>,
        /// Decoding lookahead (defaults to the training lookahead)
        #[arg(long)]
        lookahead: Option<Limit>,
    },
    /// Train and score one model per lookahead and embedding setting
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        /// Comma-separated, e.g. `0,1,inf`
        #[arg(long)]
        lookaheads: Option<String>,
        /// Comma-separated booleans, e.g. `true,false`
        #[arg(long)]
        embeddings: Option<String>,
    },
    /// Stream one text through both models on a simulated clock
    Stream {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        files: ModelFiles,
        #[arg(long)]
        text: Option<String>,
        #[arg(long)]
        context: Option<String>,
        #[arg(long)]
        lookahead: Option<Limit>,
        #[arg(long)]
        inter_arrival_ms: Option<u64>,
        /// Record wall-clock microseconds in the trace (not reproducible)
        #[arg(long)]
        wall_clock: bool,
    },
    /// Compare streaming and offline outputs on random sentences
    CheckEquivalence {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        files: ModelFiles,
        #[arg(long)]
        sentences: Option<usize>,
        #[arg(long)]
        lookahead: Option<Limit>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Gate the predictor on this lookahead instead (negative control)
        #[arg(long)]
        gate: Option<Limit>,
    },
    /// Lookahead and delay accounting of the acoustic model
    DelayReport {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lookahead: Option<Limit>,
    },
}

enum Failure {
    Usage(String),
    Check(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

const MODEL_KEYS: &[&str] = &["model", "acoustic", "vocab"];
const STREAM_LIMIT_KEYS: &[&str] = &["guardband", "blstm_chunk"];

/// Config file, then `--set` overrides, then typed flags; unknown keys fail.
fn settings(common: &Common, flags: &[(&str, Option<String>)], known: &[&[&str]]) -> CliResult<KvConfig> {
    let mut kv = match &common.config {
        Some(p) => KvConfig::read(p)?,
        None => KvConfig::new(),
    };
    for s in &common.set {
        kv.apply_override(s)?;
    }
    if let Some(o) = &common.out {
        kv.set("out", o.display());
    }
    if let Some(s) = common.seed {
        kv.set("seed", s);
    }
    for (k, v) in flags {
        if let Some(v) = v {
            kv.set(k, v);
        }
    }
    let all: Vec<&str> = known.iter().flat_map(|k| k.iter().copied()).chain(["out", "seed"]).collect();
    kv.check_known(&all)?;
    Ok(kv)
}

fn flag<T: ToString>(key: &'static str, v: &Option<T>) -> (&'static str, Option<String>) {
    (key, v.as_ref().map(ToString::to_string))
}

fn path_flag(key: &'static str, v: &Option<PathBuf>) -> (&'static str, Option<String>) {
    (key, v.as_ref().map(|p| p.display().to_string()))
}

fn out_path(kv: &KvConfig, default: &str) -> PathBuf {
    PathBuf::from(kv.raw("out").unwrap_or(default))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e).into())
}

fn layer_ids(kv: &KvConfig) -> CliResult<Vec<usize>> {
    Ok(match kv.raw("layer_ids") {
        Some("none") | Some("") => Vec::new(),
        Some(_) => kv.get_list("layer_ids")?.unwrap_or_default(),
        None => DEFAULT_LAYER_IDS.to_vec(),
    })
}

fn read_vocab(path: &Path) -> CliResult<Vocab> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(Vocab::parse_listing(&text)?)
}

/// Trained or fixture models; `model` alone implies `tokens.txt` beside it.
struct Models {
    model: PnpModel<f32>,
    acoustic: AcousticModel,
    vocab: Vocab,
}

fn load_models(kv: &KvConfig) -> CliResult<Models> {
    let fx = if kv.contains("model") && kv.contains("acoustic") {
        None
    } else {
        Some(fixtures::load_or_generate()?)
    };
    let (model, default_vocab) = match kv.raw("model") {
        Some(p) => {
            let p = PathBuf::from(p);
            let vocab = p.with_file_name(fixtures::VOCAB_FILE);
            (PnpModel::load(&p)?, Some(vocab))
        }
        None => (fx.as_ref().map(|f| f.model.clone()).expect("fixtures loaded"), None),
    };
    let acoustic = match kv.raw("acoustic") {
        Some(p) => AcousticModel::load(Path::new(p))?,
        None => fx.as_ref().map(|f| f.acoustic.clone()).expect("fixtures loaded"),
    };
    let vocab = match (kv.raw("vocab"), default_vocab) {
        (Some(p), _) => read_vocab(Path::new(p))?,
        (None, Some(p)) => read_vocab(&p)?,
        (None, None) => fx.map(|f| f.vocab).expect("fixtures loaded"),
    };
    let mut limits = acoustic.config.clone();
    limits.guardband = kv.get_or("guardband", limits.guardband)?;
    limits.blstm_chunk = kv.get_or("blstm_chunk", limits.blstm_chunk)?;
    let acoustic = acoustic.with_limits(&limits)?;
    Ok(Models { model, acoustic, vocab })
}

fn gen_corpus_cmd(common: &Common, paragraphs: &Option<usize>) -> CliResult {
    let kv = settings(common, &[flag("paragraphs", paragraphs)], &[&["paragraphs"]])?;
    let seed = kv.get_or("seed", 1u64)?;
    let n = kv.get_or("paragraphs", 1000usize)?;
    let out = out_path(&kv, "corpus.jsonl");
    let corpus = gen_corpus(seed, n)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_corpus(&out, &corpus)?;
    let held = corpus.iter().filter(|p| p.holdout).count();
    let words: usize = corpus.iter().map(|p| p.words().count()).sum();
    println!("{n} paragraphs ({held} held out), {words} words -> {}", out.display());
    Ok(())
}

fn build_dataset_cmd(
    common: &Common,
    corpus: &Option<PathBuf>,
    paragraphs: &Option<usize>,
    max_train: &Option<usize>,
    layers: &Option<String>,
) -> CliResult {
    let kv = settings(
        common,
        &[
            path_flag("corpus", corpus),
            flag("paragraphs", paragraphs),
            flag("max_train", max_train),
            flag("layer_ids", layers),
        ],
        &[&["corpus", "paragraphs", "max_train", "layer_ids"]],
    )?;
    let seed = kv.get_or("seed", 1u64)?;
    let paragraphs = match kv.raw("corpus") {
        Some(p) => read_corpus(Path::new(p))?,
        None => gen_corpus(seed, kv.get_or("paragraphs", 1000usize)?)?,
    };
    let ids = layer_ids(&kv)?;
    let data = build_dataset_limited(&paragraphs, seed, &HashEmbedder::default(), &ids, kv.get("max_train")?)?;
    let out = out_path(&kv, "data");
    write_dataset(&out, &data)?;
    let oov: usize = data.valid.iter().flat_map(|s| &s.words).filter(|w| w.oov).count();
    println!(
        "train {} samples, valid {} samples ({oov} OOV words), vocabulary {} pieces -> {}",
        data.train.len(),
        data.valid.len(),
        data.vocab.len(),
        out.display()
    );
    Ok(())
}

fn train_cmd(common: &Common, data: &Option<PathBuf>, steps: &Option<usize>, lr: &Option<f64>, lookahead: &Option<Limit>) -> CliResult {
    let kv = settings(
        common,
        &[path_flag("data", data), flag("steps", steps), flag("lr", lr), flag("lookahead", lookahead)],
        &[&["data"], TRAIN_KEYS, CONFIG_KEYS],
    )?;
    if kv.contains("vocab_size") {
        return Err(Failure::Usage("vocab_size comes from the dataset".into()));
    }
    let seed = kv.get_or("seed", 1u64)?;
    let data_dir = PathBuf::from(kv.raw("data").unwrap_or("data"));
    let ds = read_dataset(&data_dir)?;
    let mut train_kv = kv.clone();
    for k in ["data", "out", "seed"] {
        train_kv = without(&train_kv, k);
    }
    let cfg = TrainConfig::from_kv(&train_kv, ds.vocab.len())?;
    let out = out_path(&kv, "run");
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let ckpt = (cfg.checkpoint_every > 0).then_some(out.as_path());
    let outcome = train::<f32>(&ds.train, &ds.valid, &cfg, seed, ckpt)?;
    outcome.model.save(&out.join("model.weights"))?;
    write_file(&out.join("curve.csv"), outcome.curve_csv())?;
    write_file(&out.join(fixtures::VOCAB_FILE), ds.vocab.listing())?;
    let mut resolved = cfg.to_kv();
    resolved.set("seed", seed);
    write_file(&out.join("train.cfg"), resolved.to_text())?;
    println!(
        "trained {} steps at L = {}: final validation loss {:.4} -> {}",
        cfg.steps,
        cfg.model.lookahead,
        outcome.final_valid.total,
        out.display()
    );
    Ok(())
}

fn without(kv: &KvConfig, key: &str) -> KvConfig {
    let mut out = KvConfig::new();
    for k in kv.keys().filter(|k| *k != key) {
        out.set(k, kv.raw(k).unwrap_or_default());
    }
    out
}

fn eval_cmd(common: &Common, data: &Option<PathBuf>, model: &Option<PathBuf>, lookahead: &Option<Limit>) -> CliResult {
    let kv = settings(
        common,
        &[path_flag("data", data), path_flag("model", model), flag("lookahead", lookahead)],
        &[&["data", "model", "lookahead"]],
    )?;
    let ds = read_dataset(Path::new(kv.raw("data").unwrap_or("data")))?;
    let model = PnpModel::<f32>::load(Path::new(kv.raw("model").unwrap_or("run/model.weights")))?;
    if model.config.vocab_size != ds.vocab.len() {
        return Err(Failure::Usage(format!(
            "model vocabulary {} does not match dataset vocabulary {}",
            model.config.vocab_size,
            ds.vocab.len()
        )));
    }
    let l = kv.get_or("lookahead", model.config.lookahead)?;
    let report = eval_wer(&model, &ds.valid, l)?;
    let out = out_path(&kv, "eval.csv");
    write_file(&out, format!("lookahead,{}\n{l},{}\n", report_header(), report.csv_row()))?;
    print!("decoding lookahead {l}\n{}", report.summary());
    Ok(())
}

fn report_header() -> String {
    pnpstream::trainer::EvalReport::csv_header()
}

fn ablate_cmd(
    common: &Common,
    data: &Option<PathBuf>,
    steps: &Option<usize>,
    lookaheads: &Option<String>,
    embeddings: &Option<String>,
) -> CliResult {
    let kv = settings(
        common,
        &[
            path_flag("data", data),
            flag("steps", steps),
            flag("lookaheads", lookaheads),
            flag("embeddings", embeddings),
        ],
        &[&["data", "lookaheads", "embeddings"], TRAIN_KEYS, CONFIG_KEYS],
    )?;
    if kv.contains("lookahead") || kv.contains("vocab_size") {
        return Err(Failure::Usage("ablate sets lookahead and vocab_size itself; use lookaheads".into()));
    }
    let seed = kv.get_or("seed", 1u64)?;
    let ds = read_dataset(Path::new(kv.raw("data").unwrap_or("data")))?;
    let ls: Vec<Limit> = kv.get_list("lookaheads")?.unwrap_or_else(|| vec![Limit::Finite(0), Limit::Finite(1), Limit::Infinite]);
    let embs: Vec<bool> = kv.get_list("embeddings")?.unwrap_or_else(|| vec![true]);
    if ls.is_empty() || embs.is_empty() {
        return Err(Failure::Usage("lookaheads and embeddings must be non-empty".into()));
    }
    let mut train_kv = kv.clone();
    for k in ["data", "out", "seed", "lookaheads", "embeddings"] {
        train_kv = without(&train_kv, k);
    }
    let base = TrainConfig::from_kv(&train_kv, ds.vocab.len())?;
    let table = run_ablation(&ds.train, &ds.valid, &base, seed, &ls, &embs, |row| {
        println!(
            "train L = {}, eval L = {}, embeddings {}: WER {:.2}%",
            row.train_lookahead,
            row.eval_lookahead,
            row.embeddings,
            row.report.all.wer()
        );
    })?;
    let out = out_path(&kv, "ablation.csv");
    write_file(&out, table.to_csv())?;
    print!("{}", table.summary());
    Ok(())
}

fn stream_cmd(
    common: &Common,
    files: &ModelFiles,
    text: &Option<String>,
    context: &Option<String>,
    lookahead: &Option<Limit>,
    inter_arrival_ms: &Option<u64>,
    wall_clock: bool,
) -> CliResult {
    let kv = settings(
        common,
        &[
            flag("text", text),
            flag("context", context),
            flag("lookahead", lookahead),
            flag("inter_arrival_ms", inter_arrival_ms),
        ]
        .into_iter()
        .chain(files.flags())
        .collect::<Vec<_>>(),
        &[&["text", "context", "lookahead", "inter_arrival_ms"], MODEL_KEYS, STREAM_LIMIT_KEYS],
    )?;
    let m = load_models(&kv)?;
    let (ctx, words) = match kv.raw("text") {
        Some(t) => (split_text(kv.raw("context").unwrap_or("")), split_text(t)),
        None => {
            let (c, w) = fixtures::random_sentences(kv.get_or("seed", 1u64)?, 1)?.remove(0);
            (kv.raw("context").map_or(c, split_text), w)
        }
    };
    let l = kv.get_or("lookahead", m.model.config.lookahead)?;
    let dt = kv.get_or("inter_arrival_ms", 200u64)?;
    let provider = HashEmbedder::default();
    let pipe = Pipeline {
        model: &m.model,
        acoustic: &m.acoustic,
        vocab: &m.vocab,
        provider: &provider,
    };
    let opts = StreamOptions {
        wall_clock,
        ..StreamOptions::new(l)
    };
    let run = pipe.stream(&ctx, &words, dt, &opts)?;
    let out = out_path(&kv, "stream");
    write_file(&out.join("trace.csv"), run.trace.to_csv()?)?;
    let frames = FrameFile {
        frames: run.frames,
        frame_size: m.acoustic.config.frame_size,
        sample_rate: m.acoustic.config.sample_rate,
    };
    write_file(&out.join("frames.bin"), frames.to_bytes())?;
    write_file(&out.join("frames.txt"), frames.summary())?;
    let mut listing = String::from("index\tword_index\tword\tsymbol\tframes\tphrase\n");
    for (i, t) in run.pnp.iter().enumerate() {
        let word = words.get(t.word_index).map_or("", String::as_str);
        let _ = writeln!(listing, "{i}\t{}\t{word}\t{}\t{}\t{:?}", t.word_index, symbol_name(t.symbol), t.frames, t.phrase);
    }
    write_file(&out.join("pnp.tsv"), listing)?;
    println!("text: {}", words.join(" "));
    print!("{}", run.trace.summary());
    println!("{} PnP tokens, {} frames -> {}", run.pnp.len(), frames.frames.rows(), out.display());
    Ok(())
}

fn equivalence_cmd(
    common: &Common,
    files: &ModelFiles,
    sentences: &Option<usize>,
    lookahead: &Option<Limit>,
    tolerance: &Option<f64>,
    gate: &Option<Limit>,
) -> CliResult {
    let kv = settings(
        common,
        &[
            flag("sentences", sentences),
            flag("lookahead", lookahead),
            flag("tolerance", tolerance),
            flag("gate", gate),
        ]
        .into_iter()
        .chain(files.flags())
        .collect::<Vec<_>>(),
        &[&["sentences", "lookahead", "tolerance", "gate"], MODEL_KEYS, STREAM_LIMIT_KEYS],
    )?;
    let m = load_models(&kv)?;
    let seed = kv.get_or("seed", 1u64)?;
    let n = kv.get_or("sentences", 20usize)?;
    let l = kv.get_or("lookahead", m.model.config.lookahead)?;
    let provider = HashEmbedder::default();
    let pipe = Pipeline {
        model: &m.model,
        acoustic: &m.acoustic,
        vocab: &m.vocab,
        provider: &provider,
    };
    let tol: Option<f64> = kv.get("tolerance")?;
    let gate: Option<Limit> = kv.get("gate")?;
    let mut text = String::from("sentence,words,pnp_equal,max_abs_diff,pass\n");
    let mut failed = 0;
    for (i, (ctx, words)) in fixtures::random_sentences(seed, n)?.iter().enumerate() {
        let r = pipe.check_equivalence(ctx, words, l, tol, gate)?;
        let _ = writeln!(text, "{i},{},{},{:e},{}", r.words, r.pnp_equal(), r.max_abs_diff, r.pass());
        if !r.pass() {
            failed += 1;
            println!("sentence {i}: {r}");
        }
    }
    let out = out_path(&kv, "equivalence.csv");
    write_file(&out, text)?;
    println!("{} of {n} sentences equivalent at L = {l} -> {}", n - failed, out.display());
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} of {n} sentences diverged")));
    }
    Ok(())
}

fn delay_cmd(common: &Common, lookahead: &Option<Limit>) -> CliResult {
    let kv = settings(common, &[flag("lookahead", lookahead)], &[&["lookahead"], ACOUSTIC_KEYS])?;
    let l = kv.get_or("lookahead", Limit::Finite(1))?;
    let acoustic_kv = without(&without(&without(&kv, "lookahead"), "out"), "seed");
    let cfg = AcousticConfig::from_kv(&acoustic_kv)?;
    let report = delay_accounting(&cfg)?;
    let out = out_path(&kv, "delay_report.txt");
    write_file(&out, report.to_kv_text(l))?;
    println!("{}", report.headline());
    println!("{report}");
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match &cli.command {
        Command::GenCorpus { common, paragraphs } => gen_corpus_cmd(common, paragraphs),
        Command::BuildDataset {
            common,
            corpus,
            paragraphs,
            max_train,
            layer_ids,
        } => build_dataset_cmd(common, corpus, paragraphs, max_train, layer_ids),
        Command::Train {
            common,
            data,
            steps,
            lr,
            lookahead,
        } => train_cmd(common, data, steps, lr, lookahead),
        Command::EvalG2p {
            common,
            data,
            model,
            lookahead,
        } => eval_cmd(common, data, model, lookahead),
        Command::Ablate {
            common,
            data,
            steps,
            lookaheads,
            embeddings,
        } => ablate_cmd(common, data, steps, lookaheads, embeddings),
        Command::Stream {
            common,
            files,
            text,
            context,
            lookahead,
            inter_arrival_ms,
            wall_clock,
        } => stream_cmd(common, files, text, context, lookahead, inter_arrival_ms, *wall_clock),
        Command::CheckEquivalence {
            common,
            files,
            sentences,
            lookahead,
            tolerance,
            gate,
        } => equivalence_cmd(common, files, sentences, lookahead, tolerance, gate),
        Command::DelayReport { common, lookahead } => delay_cmd(common, lookahead),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
