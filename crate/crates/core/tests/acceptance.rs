//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs as a plain binary (`harness = false`):
//!
//! ```text
//! cargo test --release --test acceptance
//! ```

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng as _;

use pnpstream::layers::{allocate_skew, Activation, ConvLayer, LcCnn};
use pnpstream::llm2pnp::{DecoderInput, EncoderInput, PnpModel, PnpModelConfig};
use pnpstream::pnp2speech::{
    delay_accounting, predict_first_emission, random_pnp, token_durations, AcousticConfig, AcousticModel, AcousticStream,
};
use pnpstream::rng::seeded;
use pnpstream::runtime::fixtures::{self, random_sentences};
use pnpstream::runtime::Pipeline;
use pnpstream::tensor::Matrix;
use pnpstream::textdata::phones::{EOS, NUM_PHONES, SEP_INNER, SEP_REGULAR};
use pnpstream::textdata::{build_dataset_limited, gen_corpus, tokenize, EmbeddingProvider, HashEmbedder, DEFAULT_LAYER_IDS};
use pnpstream::textdata::Dataset;
use pnpstream::trainer::{
    eval_wer, finite_difference_check, run_ablation, train, AblationTable, LossWeights, Prepared, TrainConfig,
};
use pnpstream::Limit;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Runs `f` under a time budget; a panic or an overrun is a failure.
fn criterion(n: usize, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let took = t.elapsed();
    let (mut pass, mut detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(b) = budget {
        if took > b {
            pass = false;
            detail.push_str(&format!("; over the {} s budget", b.as_secs()));
        }
    }
    println!(
        "{} {n}. {name} [{:.1} s]: {detail}",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    pass
}

/// A label-like symbol history: 1 to 4 phones per word (sometimes an inner
/// separator), a separator after each word and eos at the end.
fn random_history(seed: u64, words: usize) -> Vec<usize> {
    let mut rng = seeded(seed);
    let mut h = Vec::new();
    for w in 0..words {
        for _ in 0..rng.random_range(1..=4) {
            h.push(if rng.random_bool(0.1) { SEP_INNER } else { rng.random_range(0..NUM_PHONES) });
        }
        h.push(if w + 1 == words { EOS } else { SEP_REGULAR });
    }
    h
}

fn bits(v: &[f32]) -> Vec<u32> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn causality() -> Outcome {
    let fx = fixtures::load_or_generate().unwrap();
    let provider = HashEmbedder::default();
    let m = &fx.model;
    let (mut checked, mut violations, mut sensitive) = (0usize, 0usize, 0usize);
    for (s, (ctx, words)) in random_sentences(101, 100).unwrap().iter().enumerate() {
        let tokens = tokenize(words, Some(&fx.vocab));
        let emb = provider.embed(ctx, words, &tokens, &m.config.layer_ids).unwrap();
        let input = EncoderInput::<f32>::new(&tokens, Some(&emb), &m.config).unwrap();
        let hist = random_history(s as u64, words.len());
        let dec_in = DecoderInput::from_history(&hist[..hist.len() - 1]);
        let enc = m.encode(&input).unwrap();
        let mut rng = seeded(1000 + s as u64);
        let bases: Vec<_> = (0..3).map(|l| m.decode_all(&enc, &dec_in, Limit::Finite(l)).unwrap()).collect();
        for w in 0..words.len() {
            let mut other = input.clone();
            for j in 0..other.len() {
                if other.token_words[j] == w {
                    other.token_ids[j] = (other.token_ids[j] + rng.random_range(1..m.config.vocab_size)) % m.config.vocab_size;
                    if let Some(e) = &mut other.embeddings {
                        for v in e.row_mut(j) {
                            *v += rng.random_range(-1.0..1.0);
                        }
                    }
                }
            }
            let enc2 = m.encode(&other).unwrap();
            for (l, base) in bases.iter().enumerate() {
                let out = m.decode_all(&enc2, &dec_in, Limit::Finite(l)).unwrap();
                for p in 0..dec_in.len() {
                    let (a, b) = (base.row(p), out.row(p));
                    let same = bits(&a.phone_logits) == bits(&b.phone_logits)
                        && bits(&a.prosody) == bits(&b.prosody)
                        && bits(&a.phrase_logits) == bits(&b.phrase_logits);
                    if w > dec_in.words[p] + l {
                        checked += 1;
                        violations += usize::from(!same);
                    } else {
                        sensitive += usize::from(!same);
                    }
                }
            }
        }
    }
    outcome(
        violations == 0 && checked > 0 && sensitive > 0,
        format!("{checked} masked (row, word, L) cases, {violations} changed; {sensitive} visible perturbations did change the output"),
    )
}

fn stream_frames(m: &AcousticModel, toks: &[pnpstream::textdata::PnpToken], seed: u64) -> Matrix<f32> {
    let mut rng = seeded(seed);
    let mut s = AcousticStream::new(m).unwrap();
    let mut out = Matrix::empty(m.config.frame_dim);
    let mut i = 0;
    while i < toks.len() {
        let end = (i + rng.random_range(1..=5)).min(toks.len());
        out.append(&s.push(&toks[i..end]).unwrap()).unwrap();
        i = end;
    }
    out.append(&s.flush().unwrap()).unwrap();
    out
}

fn streaming_equivalence() -> Outcome {
    let fx = fixtures::load_or_generate().unwrap();
    let mut detail = Vec::new();
    let mut pass = true;
    for (g, tol) in [(Limit::Infinite, 1e-6), (Limit::Finite(2), 1e-3)] {
        let cfg = AcousticConfig {
            guardband: g,
            ..fx.acoustic.config.clone()
        };
        let m = fx.acoustic.with_limits(&cfg).unwrap();
        let mut rng = seeded(202);
        let mut worst = 0.0f64;
        for k in 0..50u64 {
            let toks = random_pnp(500 + k, rng.random_range(3..=60));
            let off = m.forward(&toks).unwrap().frames;
            let on = stream_frames(&m, &toks, k);
            let d = if off.shape() == on.shape() { f64::from(off.max_abs_diff(&on).unwrap()) } else { f64::INFINITY };
            worst = worst.max(d);
        }
        pass &= worst <= tol;
        detail.push(format!("guardband {g}: max |diff| {worst:.2e} (<= {tol:.0e})"));
    }
    let provider = HashEmbedder::default();
    let pipe = Pipeline {
        model: &fx.model,
        acoustic: &fx.acoustic,
        vocab: &fx.vocab,
        provider: &provider,
    };
    let mut same = 0;
    for (i, (ctx, words)) in random_sentences(303, 100).unwrap().iter().enumerate() {
        let r = pipe.check_equivalence(ctx, words, Limit::Finite(i % 3), None, None).unwrap();
        same += usize::from(r.pnp_equal());
    }
    pass &= same == 100;
    detail.push(format!("incremental = offline PnP in {same}/100"));
    outcome(pass, detail.join("; "))
}

fn receptive_field() -> Outcome {
    let mut rng = seeded(303);
    let mut bad = Vec::new();
    for c in 0..200 {
        let kernels: Vec<usize> = (0..rng.random_range(1..=5)).map(|_| 2 * rng.random_range(0..=3) + 1).collect();
        let budget = rng.random_range(0..=8);
        let alloc = allocate_skew(&kernels, budget).unwrap();
        let half: usize = kernels.iter().map(|k| (k - 1) / 2).sum();
        if alloc.total_right() != budget.min(half) || (0..kernels.len()).any(|l| alloc.right()[l] > (kernels[l] - 1) / 2) {
            bad.push(format!("config {c}: allocation {:?} for {kernels:?} budget {budget}", alloc.right()));
            continue;
        }
        let (left, right) = (alloc.total_left(), alloc.total_right());
        // positive taps: no cancellation, so every reachable output is nonzero
        let layers = kernels
            .iter()
            .map(|&k| {
                let taps = Matrix::from_vec(k, 1, (0..k).map(|_| rng.random_range(0.1f32..1.0)).collect()).unwrap();
                ConvLayer::new(taps, k, None, Activation::Identity).unwrap()
            })
            .collect();
        let cnn = LcCnn::new(layers, alloc).unwrap();
        let n = left + right + 11;
        let t0 = right + 5;
        let mut x = Matrix::zeros(n, 1);
        x.set(t0, 0, 1.0);
        let y = cnn.forward(&x).unwrap();
        let hit: Vec<usize> = (0..n).filter(|&t| y.get(t, 0) != 0.0).collect();
        // output t reads t - left ..= t + right, so the impulse reaches t0 - right ..= t0 + left
        let want: Vec<usize> = (t0 - right..=t0 + left).filter(|&t| t < n).collect();
        if hit != want {
            bad.push(format!("config {c}: {kernels:?} budget {budget} reaches {hit:?}, expected {want:?}"));
        }
    }
    let fig = allocate_skew(&[3, 3], 1).unwrap().right().to_vec();
    let post = allocate_skew(&[5; 5], 2).unwrap().right().to_vec();
    let examples = fig == [1, 0] && post == [2, 0, 0, 0, 0];
    outcome(
        bad.is_empty() && examples,
        format!(
            "200 configs, {} mismatches{}; k=[3,3] la=1 -> {fig:?}, 5-layer PostNet budget 2 -> {post:?}",
            bad.len(),
            bad.first().map(|b| format!(" (first: {b})")).unwrap_or_default()
        ),
    )
}

fn delay() -> Outcome {
    let r = delay_accounting(&AcousticConfig::default()).unwrap();
    let report_ok = r.encoder_tokens == 6 && r.postnet_frames == 2 && r.headline() == "6 PnP tokens plus 2 frames";
    let mut rng = seeded(404);
    let (mut matched, mut emitted) = (0, 0);
    for trial in 0..50u64 {
        let k = 2 * rng.random_range(1..=3) + 1;
        let postnet_layers = rng.random_range(1..=5);
        let cfg = AcousticConfig {
            encoder_layers: rng.random_range(1..=3),
            encoder_kernel: k,
            encoder_lookahead: rng.random_range(0..=(k - 1) / 2),
            blstm_chunk: Limit::Finite(rng.random_range(1..=6)),
            guardband: Limit::Finite(rng.random_range(0..=3)),
            postnet_layers,
            // at most half of each 5-wide PostNet kernel
            postnet_lookahead: rng.random_range(0..=(2 * postnet_layers).min(3)),
            channels: 8,
            blstm_hidden: 4,
            decoder_width: 8,
            postnet_channels: 8,
            frame_dim: 4,
            ..AcousticConfig::default()
        };
        let m = AcousticModel::random(&cfg, trial).unwrap();
        let toks = random_pnp(4000 + trial, rng.random_range(3..=50));
        let predicted = predict_first_emission(&cfg, &token_durations(&toks).unwrap()).unwrap();
        let mut s = AcousticStream::new(&m).unwrap();
        let measured = toks
            .iter()
            .enumerate()
            .find(|(_, t)| s.push(std::slice::from_ref(*t)).unwrap().rows() > 0)
            .map(|(i, _)| i + 1);
        matched += usize::from(measured == predicted);
        emitted += usize::from(measured.is_some());
    }
    outcome(
        report_ok && matched == 50 && emitted > 0,
        format!(
            "defaults: \"{}\"; first emission matches prediction on {matched}/50 configs ({emitted} emitted before the end)",
            r.headline()
        ),
    )
}

fn gradients() -> Outcome {
    let corpus = gen_corpus(505, 24).unwrap();
    let data = build_dataset_limited(&corpus, 505, &HashEmbedder::default(), &DEFAULT_LAYER_IDS, None).unwrap();
    let cfg = PnpModelConfig::micro(data.vocab.len());
    let mut model = PnpModel::<f64>::init(cfg, 505).unwrap();
    let (mean, std) = pnpstream::trainer::prosody_stats(&data.train);
    model.set_prosody_stats(&mean, &std).unwrap();
    let prepared: Vec<Prepared<f64>> = data.train[..2].iter().map(|s| Prepared::new(s, &model).unwrap()).collect();
    let batch: Vec<&Prepared<f64>> = prepared.iter().collect();
    let r = finite_difference_check(&mut model, &batch, Limit::Finite(1), LossWeights::default(), 200, 1e-3, 505).unwrap();
    let worst = r.worst().unwrap();
    outcome(
        r.max_rel_err() < 1e-4 && r.checks.len() == 200,
        format!(
            "200 coordinates, eps 1e-3: max relative error {:.2e} at {}[{}]",
            r.max_rel_err(),
            worst.param,
            worst.index
        ),
    )
}

/// Training data for the two trend criteria: 5000 training samples and
/// every holdout paragraph of a 24000-paragraph corpus for evaluation.
fn trend_data() -> Dataset {
    let corpus = gen_corpus(3, 24_000).unwrap();
    build_dataset_limited(&corpus, 3, &HashEmbedder::default(), &DEFAULT_LAYER_IDS, Some(5000)).unwrap()
}

fn trend_config(vocab: usize) -> TrainConfig {
    let mut cfg = TrainConfig::new(PnpModelConfig::micro(vocab));
    cfg.steps = 4000;
    cfg.lr = 2e-3;
    cfg.eval_every = 0;
    cfg.valid_limit = 64;
    cfg
}

/// Criterion 6 models: one per L, all with embeddings.
fn lookahead_table(data: &Dataset) -> AblationTable {
    let ls = [Limit::Finite(0), Limit::Finite(1), Limit::Infinite];
    run_ablation(&data.train, &data.valid, &trend_config(data.vocab.len()), 1, &ls, &[true], |_| {}).unwrap()
}

fn distillation_trend(data: &Dataset, table: &AblationTable) -> Outcome {
    let get = |l: Limit| table.find(l, l, true).unwrap();
    let (l0, l1, linf) = (get(Limit::Finite(0)), get(Limit::Finite(1)), get(Limit::Infinite));
    let all = (l0.all.wer(), l1.all.wer(), linf.all.wer());
    let la = (l0.lookahead.wer(), l1.lookahead.wer());
    outcome(
        all.0 > all.1 && all.1 >= all.2 && la.1 <= 0.6 * la.0,
        format!(
            "{} train / {} eval samples; All WER L=0 {:.2}%, L=1 {:.2}%, L=inf {:.2}%; flap/heteronym subset ({} words) L=0 {:.2}%, L=1 {:.2}%",
            data.train.len(),
            data.valid.len(),
            all.0,
            all.1,
            all.2,
            l0.lookahead.words,
            la.0,
            la.1
        ),
    )
}

/// Compares the L = 1 model of `table` (with embeddings) against the same
/// configuration trained without them.
fn embedding_trend(data: &Dataset, table: &AblationTable) -> Outcome {
    let l1 = Limit::Finite(1);
    let with = table.find(l1, l1, true).unwrap();
    let mut cfg = trend_config(data.vocab.len());
    cfg.model.lookahead = l1;
    cfg.model.layer_ids.clear();
    let m = train::<f32>(&data.train, &data.valid, &cfg, 1, None).unwrap().model;
    let without = eval_wer(&m, &data.valid, l1).unwrap();
    let (a, b) = (with.context.wer(), without.context.wer());
    outcome(
        a < b,
        format!(
            "L=1, context-dependent heteronyms ({} words): with embeddings {a:.2}%, without {b:.2}% (All {:.2}% vs {:.2}%)",
            with.context.words,
            with.all.wer(),
            without.all.wer()
        ),
    )
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let failures: Vec<String> = common::run_pipeline(a.path()).into_iter().chain(common::run_pipeline(b.path())).collect();
    let (sa, sb) = (common::snapshot(a.path()), common::snapshot(b.path()));
    let diff = common::differing(&sa, &sb);
    outcome(
        failures.is_empty() && diff.is_empty() && !sa.is_empty(),
        format!(
            "{} subcommand runs x2, {} output files, {} differ{}",
            common::PIPELINE.len(),
            sa.len(),
            diff.len(),
            failures.first().map(|f| format!("; failed: {f}")).unwrap_or_default()
        ),
    )
}

fn dataset_contract() -> Outcome {
    let r = common::dataset_contract(909, 10_000);
    outcome(
        r.samples == 10_000 && r.violations.is_empty() && r.expansions > 0 && r.oov_words > 0,
        format!(
            "{} samples, {} numeral expansions, {} OOV eval words, {} violations{}",
            r.samples,
            r.expansions,
            r.oov_words,
            r.violations.len(),
            r.violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
        ),
    )
}

/// Numeric arguments select criteria (`-- 4 9`); none selects all.
fn main() {
    // failures are reported on the criterion line
    std::panic::set_hook(Box::new(|_| {}));
    let picked: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: usize| picked.is_empty() || picked.contains(&n);
    let secs = Duration::from_secs;
    let mut ok = true;
    if run(1) {
        ok &= criterion(1, "causality", Some(secs(60)), causality);
    }
    if run(2) {
        ok &= criterion(2, "streaming equals offline", Some(secs(120)), streaming_equivalence);
    }
    if run(3) {
        ok &= criterion(3, "LC-CNN receptive field", None, receptive_field);
    }
    if run(4) {
        ok &= criterion(4, "delay accounting", None, delay);
    }
    if run(5) {
        ok &= criterion(5, "gradient correctness", Some(secs(120)), gradients);
    }
    // criterion 6 times data generation and all three models; 7 reuses them
    let mut trend: Option<(Dataset, AblationTable)> = None;
    if run(6) {
        ok &= criterion(6, "distillation trend", Some(secs(15 * 60)), || {
            let data = trend_data();
            let table = lookahead_table(&data);
            let o = distillation_trend(&data, &table);
            trend = Some((data, table));
            o
        });
    }
    if run(7) {
        ok &= criterion(7, "embedding trend", None, || {
            let (data, table) = trend.take().unwrap_or_else(|| {
                let data = trend_data();
                let table = lookahead_table(&data);
                (data, table)
            });
            embedding_trend(&data, &table)
        });
    }
    if run(8) {
        ok &= criterion(8, "pipeline determinism", None, cli_determinism);
    }
    if run(9) {
        ok &= criterion(9, "dataset contract", None, dataset_contract);
    }
    if !ok {
        std::process::exit(1);
    }
}
