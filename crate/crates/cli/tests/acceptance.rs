//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Pass criterion numbers as arguments to run a subset.

use std::collections::BTreeMap;
use std::fs;
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use morphseq::decoder::{beam_search, expand_step, finalize, finalize_tokens, initial_beam, rescore, BeamConfig};
use morphseq::eval::{bleu, stem_bleu, BleuStats};
use morphseq::model::{
    distributed_train, distributed_train_shards, encode_pairs, train, Model, ModelConfig, TrainConfig, TrainingPair,
    Vocabs, SUFFIX_BRANCH_PARAMS,
};
use morphseq::numerics::{Rng, Stencil};
use morphseq::synth::{generate, holdout_split, SynthGrammar, SynthSentence};
use morphseq::text::{
    apply_bpe_with_suffix_adjust, factor_sentence, ibm1_train, ibm1_train_traced, learn_bpe, FactoredTokens,
    StemmerRules, BOS, CONTINUATION_MARKER, EOS, NO_SUFFIX, NO_SUFFIX_ID,
};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn lib<T>(r: morphseq::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure!(t < limit, "took {t:.1?}, limit {limit:?}");
    Ok(())
}

fn tiny_config(stem_vocab: usize, suffix_vocab: usize, lambda: f64) -> ModelConfig {
    ModelConfig {
        src_vocab: 9,
        stem_vocab,
        suffix_vocab,
        embed_dim: 4,
        hidden_dim: 6,
        dropout_rate: 0.0,
        lambda,
    }
}

fn random_pairs(rng: &mut Rng, n: usize, cfg: &ModelConfig) -> Vec<TrainingPair> {
    (0..n)
        .map(|_| {
            let m = 1 + rng.below(4);
            let k = rng.below(4);
            let src = (0..m).map(|_| 3 + rng.below(cfg.src_vocab - 3)).collect();
            let stems = (0..k).map(|_| 3 + rng.below(cfg.stem_vocab - 3)).collect();
            let sufs = (0..k).map(|_| 3 + rng.below(cfg.suffix_vocab - 3)).collect();
            TrainingPair::new(src, stems, sufs).unwrap()
        })
        .collect()
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let (mut central, mut central_abs, mut five) = (0.0f64, 0.0f64, 0.0f64);
    let mut scalars = 0;
    for seed in 0..3 {
        let cfg = tiny_config(8, 7, 0.3);
        let model = lib(Model::with_init_scale(cfg.clone(), seed, 0.5))?;
        scalars = model.params().num_scalars();
        ensure!(scalars <= 10_000, "{scalars} parameters");
        let pairs = random_pairs(&mut Rng::new(seed), 3, &cfg);
        let refs: Vec<&TrainingPair> = pairs.iter().collect();
        let report = lib(model.gradient_check(&refs, cfg.lambda, 1e-5))?;
        central = central.max(report.max_relative_error);
        central_abs = central_abs.max(report.max_abs_error);
        let report = lib(model.gradient_check_with(&refs, cfg.lambda, 1e-3, Stencil::FivePoint))?;
        five = five.max(report.max_relative_error);
    }
    let detail = format!(
        "central h=1e-5 max relative error {central:.2e} (max abs {central_abs:.1e}); \
         five-point h=1e-3 max relative error {five:.2e}; 3 models of {scalars} parameters"
    );
    ensure!(central < 1e-4, "{detail}");
    within(Duration::from_secs(60), start)?;
    Ok(detail)
}

/// Factored training pairs plus the vocabularies built from them.
fn factored_corpus(
    sents: &[SynthSentence],
    rules: &StemmerRules,
    word_level: bool,
) -> Result<(Vocabs, Vec<TrainingPair>), String> {
    let src: Vec<Vec<String>> = sents.iter().map(|s| s.source.clone()).collect();
    let tgt: Vec<FactoredTokens> = sents
        .iter()
        .map(|s| {
            let words = s.target_words();
            if word_level {
                let n = words.len();
                FactoredTokens::new(words, vec![NO_SUFFIX.to_string(); n]).unwrap()
            } else {
                factor_sentence(&words, rules)
            }
        })
        .collect();
    let vocabs = lib(Vocabs::build(&src, &tgt, (30_000, 30_000, 30_000)))?;
    let pairs = lib(encode_pairs(&vocabs, &src, &tgt))?;
    Ok((vocabs, pairs))
}

fn translate_words(model: &Model, vocabs: &Vocabs, source: &[String], beam: &BeamConfig) -> Result<Vec<String>, String> {
    let hyps = lib(beam_search(&vocabs.src.encode(source), model, beam))?;
    Ok(finalize(&hyps[0], &vocabs.stem, &vocabs.suffix).unwrap_or_default())
}

fn overfit() -> Outcome {
    let start = Instant::now();
    let g = SynthGrammar::default_grammar();
    let rules = lib(g.stemmer_rules())?;
    let corpus = lib(generate(&g, 50, 1))?;
    let (vocabs, pairs) = factored_corpus(&corpus, &rules, false)?;
    let cfg = TrainConfig {
        embed_dim: 32,
        hidden_dim: 64,
        dropout: 0.0,
        epochs: 200,
        batch_size: 4,
        seed: 1,
        ..TrainConfig::default()
    };
    let mc = cfg.model_config(vocabs.src.len(), vocabs.stem.len(), vocabs.suffix.len());
    let out = lib(train(lib(Model::new(mc, cfg.seed))?, &pairs, &cfg, |_, _| Ok(())))?;
    let (epoch, loss) = out
        .curve
        .iter()
        .find(|e| e.loss.total < 0.05)
        .map(|e| (e.epoch, e.loss.total))
        .ok_or_else(|| format!("final loss {}", out.curve.last().unwrap().loss.total))?;
    let beam = BeamConfig::default();
    let mut exact = 0;
    for s in &corpus {
        if translate_words(&out.model, &vocabs, &s.source, &beam)? == s.target_words() {
            exact += 1;
        }
    }
    ensure!(exact * 100 >= 98 * corpus.len(), "{exact}/{} reproduced", corpus.len());
    within(Duration::from_secs(300), start)?;
    Ok(format!(
        "loss {loss:.4} at epoch {epoch}, final {:.4}; beam 4 reproduces {exact}/{}",
        out.curve.last().unwrap().loss.total,
        corpus.len()
    ))
}

fn novel_form_accuracy(seed: u64, word_level: bool) -> Result<f64, String> {
    let g = SynthGrammar::default_grammar();
    let rules = lib(g.stemmer_rules())?;
    let corpus = lib(generate(&g, 1500, seed))?;
    let split = lib(holdout_split(&corpus, &g, seed))?;
    let (vocabs, pairs) = factored_corpus(&split.train, &rules, word_level)?;
    let cfg = TrainConfig {
        embed_dim: 32,
        hidden_dim: 64,
        dropout: 0.0,
        epochs: 20,
        batch_size: 16,
        learning_rate: 0.003,
        seed,
        ..TrainConfig::default()
    };
    let mc = cfg.model_config(vocabs.src.len(), vocabs.stem.len(), vocabs.suffix.len());
    let out = lib(train(lib(Model::new(mc, seed))?, &pairs, &cfg, |_, _| Ok(())))?;
    let beam = BeamConfig {
        max_len: 30,
        ..BeamConfig::default()
    };
    let (mut hit, mut total) = (0, 0);
    for s in split.test_novel.iter().take(150) {
        let words = translate_words(&out.model, &vocabs, &s.source, &beam)?;
        let gold = s.target_words();
        for p in s.positions_in(&split.held_out) {
            total += 1;
            if words.get(p) == Some(&gold[p]) {
                hit += 1;
            }
        }
    }
    ensure!(total > 0, "no novel positions for seed {seed}");
    Ok(hit as f64 / total as f64)
}

fn directional_suffix() -> Outcome {
    let start = Instant::now();
    let mut gaps = Vec::new();
    let mut detail = Vec::new();
    for seed in 1..=3 {
        let two_step = novel_form_accuracy(seed, false)?;
        let word = novel_form_accuracy(seed, true)?;
        gaps.push(two_step - word);
        detail.push(format!("seed {seed}: {:.1}% vs {:.1}%", 100.0 * two_step, 100.0 * word));
    }
    let gap = 100.0 * gaps.iter().sum::<f64>() / gaps.len() as f64;
    ensure!(gap >= 10.0, "mean gap {gap:.1} points ({})", detail.join("; "));
    within(Duration::from_secs(1200), start)?;
    Ok(format!("mean gap {gap:.1} points ({})", detail.join("; ")))
}

type Candidate = (Vec<usize>, Vec<usize>, f64);

/// Every allowed continuation of every hypothesis, ranked as the beam ranks them.
fn enumerate_all(beam: &[morphseq::decoder::Hypothesis], m: &Model, src: &[usize]) -> Result<Vec<Candidate>, String> {
    let (sv, fv) = (m.config().stem_vocab, m.config().suffix_vocab);
    let mut all = vec![];
    for (h, hyp) in beam.iter().enumerate() {
        for stem in (0..sv).filter(|&s| s != BOS) {
            let sufs: Vec<usize> = if stem == EOS {
                vec![NO_SUFFIX_ID]
            } else {
                (0..fv).filter(|&f| f != BOS && f != EOS).collect()
            };
            for suf in sufs {
                let mut s = hyp.substems().to_vec();
                let mut f = hyp.suffixes().to_vec();
                s.push(stem);
                f.push(suf);
                let score = lib(rescore(src, m, &s, &f))?;
                all.push((h, stem, suf, s, f, score));
            }
        }
    }
    all.sort_by(|a, b| b.5.total_cmp(&a.5).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    Ok(all.into_iter().map(|c| (c.3, c.4, c.5)).collect())
}

fn cube_pruning_exactness() -> Outcome {
    let mut rng = Rng::new(2024);
    let mut compared = 0;
    for trial in 0..100u64 {
        let stem_vocab = 3 + rng.below(18);
        let suffix_vocab = 4 + rng.below(2);
        let cfg = ModelConfig {
            src_vocab: 8,
            stem_vocab,
            suffix_vocab,
            embed_dim: 3,
            hidden_dim: 4,
            dropout_rate: 0.0,
            lambda: 0.1,
        };
        let m = lib(Model::with_init_scale(cfg, trial, 1.5))?;
        let src: Vec<usize> = (0..1 + rng.below(4)).map(|_| 3 + rng.below(5)).collect();
        let enc = lib(m.encode(&src))?;
        let beam = BeamConfig {
            beam_size: stem_vocab * suffix_vocab,
            ..BeamConfig::default()
        };
        let mut live = initial_beam(&enc);
        for _ in 0..2 {
            let got = lib(expand_step(&live, &enc, &m, &beam))?;
            let want = enumerate_all(&live, &m, &src)?;
            ensure!(
                got.len() == want.len().min(beam.beam_size),
                "trial {trial}: {} candidates vs {}",
                got.len(),
                want.len()
            );
            for (h, (s, f, score)) in got.iter().zip(&want) {
                ensure!(
                    h.substems() == s.as_slice() && h.suffixes() == f.as_slice(),
                    "trial {trial}: candidate order differs"
                );
                ensure!((h.log_score() - score).abs() <= 1e-12, "trial {trial}: score {} vs {score}", h.log_score());
                compared += 1;
            }
            live = got.into_iter().filter(|h| !h.is_finished()).take(3).collect();
            if live.is_empty() {
                break;
            }
        }
    }
    Ok(format!("100 models, {compared} candidates identical to exhaustive enumeration"))
}

fn round_trip(corpus: &[Vec<String>], rules: &StemmerRules, merges: usize) -> Result<(usize, usize, usize), String> {
    let factored: Vec<FactoredTokens> = corpus.iter().map(|s| factor_sentence(s, rules)).collect();
    let stems: Vec<Vec<String>> = factored.iter().map(|f| f.stems().to_vec()).collect();
    let bpe = learn_bpe(&stems, merges);
    let (mut inflected, mut fragments, mut violations) = (0, 0, 0);
    for (words, f) in corpus.iter().zip(&factored) {
        ensure!(f.stems().len() == f.suffixes().len(), "factored lengths differ: {words:?}");
        inflected += f.suffixes().iter().filter(|x| *x != NO_SUFFIX).count();
        let b = lib(apply_bpe_with_suffix_adjust(f, &bpe))?;
        ensure!(b.stems().len() == b.suffixes().len(), "segmented lengths differ: {words:?}");
        fragments += b.stems().iter().filter(|s| s.ends_with(CONTINUATION_MARKER)).count();
        if finalize_tokens(b.stems(), b.suffixes()).ok().as_ref() != Some(words) {
            violations += 1;
        }
    }
    Ok((inflected, fragments, violations))
}

const RUSSIAN_SAMPLE: &str = "\
кошка видит собаку
большие дома стоят на улице
мы читали интересные книги в библиотеке
новая школа открылась в городе
дети играют с маленькими собаками
он написал длинное письмо своей матери
";

fn factoring_round_trip() -> Outcome {
    let g = SynthGrammar::default_grammar();
    let corpus: Vec<Vec<String>> = lib(generate(&g, 10_000, 11))?.iter().map(|s| s.target_words()).collect();
    let (inflected, fragments, violations) = round_trip(&corpus, &lib(g.stemmer_rules())?, 40)?;
    ensure!(violations == 0, "{violations} synthetic sentences changed");
    ensure!(inflected > 0 && fragments > 0, "stemmer or BPE never fired");

    let user: Vec<Vec<String>> = RUSSIAN_SAMPLE
        .lines()
        .map(|l| l.split_whitespace().map(String::from).collect())
        .collect();
    let (ru_inflected, ru_fragments, ru_violations) = round_trip(&user, &StemmerRules::russian(), 30)?;
    ensure!(ru_violations == 0, "{ru_violations} Russian sentences changed");
    ensure!(ru_inflected > 0 && ru_fragments > 0, "stemmer or BPE never fired on Russian sample");
    Ok(format!(
        "10000 synthetic sentences ({inflected} suffixes, {fragments} non-final fragments) and {} Russian sentences, 0 violations",
        user.len()
    ))
}

fn ibm_model_1() -> Outcome {
    let pair = |s: &str, t: &str| {
        (
            s.split_whitespace().map(String::from).collect::<Vec<_>>(),
            t.split_whitespace().map(String::from).collect::<Vec<_>>(),
        )
    };
    let toy = vec![pair("la maison", "the house"), pair("la fleur", "the flower")];
    let (_, trace) = lib(ibm1_train_traced(&toy, 20))?;
    for w in trace.log_likelihoods.windows(2) {
        ensure!(w[1] >= w[0] - 1e-12, "log-likelihood decreased: {} -> {}", w[0], w[1]);
    }
    let t = lib(ibm1_train(&toy, 10))?.prob("house", "maison");
    ensure!(t > 0.9, "t(house|maison) = {t}");
    Ok(format!(
        "log-likelihood {:.4} -> {:.4} monotone over 20 iterations; t(house|maison) = {t:.4}",
        trace.log_likelihoods[0],
        trace.log_likelihoods.last().unwrap()
    ))
}

fn distributed_training() -> Outcome {
    let cfg = tiny_config(8, 7, 0.1);
    let corpus = random_pairs(&mut Rng::new(77), 14, &cfg);
    let tc = TrainConfig {
        embed_dim: cfg.embed_dim,
        hidden_dim: cfg.hidden_dim,
        dropout: 0.0,
        epochs: 4,
        batch_size: 3,
        learning_rate: 0.01,
        sync_every: 2,
        seed: 5,
        ..TrainConfig::default()
    };
    let model = || Model::with_init_scale(cfg.clone(), 3, 0.5).unwrap();
    let single = lib(train(model(), &corpus, &tc, |_, _| Ok(())))?;
    let one = lib(distributed_train(model(), &corpus, &tc))?;
    ensure!(one.model.params().bit_identical(single.model.params()), "workers=1 differs from train()");
    ensure!(one.curve == single.curve, "workers=1 loss curve differs");

    let two = lib(distributed_train_shards(model(), &[&corpus, &corpus], &[9, 9], &tc))?;
    for w in &two.worker_params {
        ensure!(two.model.params().bit_identical(w), "average differs from a worker");
    }
    Ok(format!(
        "workers=1 bit-identical to train() over {} syncs; 2 identical shards average exactly ({} syncs)",
        one.syncs, two.syncs
    ))
}

fn lambda_contract() -> Outcome {
    let mut checked = 0;
    for seed in 0..10 {
        let cfg = tiny_config(8, 7, 0.1);
        let m = lib(Model::with_init_scale(cfg.clone(), seed, 0.8))?;
        for p in random_pairs(&mut Rng::new(100 + seed), 3, &cfg) {
            let (stems, sufs) = (p.target.substems(), p.target.suffixes());
            let l0 = lib(m.forward_loss(&p.src, stems, sufs, 0.0))?;
            let l1 = lib(m.forward_loss(&p.src, stems, sufs, 1.0))?;
            ensure!(l0.total == l0.stem, "L(0) = {} but L_stem = {}", l0.total, l0.stem);
            ensure!(l1.total == l1.suffix, "L(1) = {} but L_suffix = {}", l1.total, l1.suffix);
            let (_, grads, _) = lib(m.loss_and_gradients(&[&p], 0.0, None))?;
            for name in SUFFIX_BRANCH_PARAMS {
                let id = lib(m.params().id(name))?;
                let n = m.params().get(id).len();
                ensure!(grads.dense(id, n).iter().all(|&x| x == 0.0), "nonzero gradient for {name} at λ=0");
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} sentences: L(0)=L_stem, L(1)=L_suffix exactly, suffix-branch gradient zero at λ=0"))
}

fn toks(lines: &[&str]) -> Vec<Vec<String>> {
    lines.iter().map(|l| l.split_whitespace().map(String::from).collect()).collect()
}

fn bleu_sanity() -> Outcome {
    let x = toks(&["the cat sat on the mat", "a dog runs", "one"]);
    let b = lib(bleu(&x, &x))?;
    ensure!(b == 1.0, "bleu(x, x) = {b}");

    let s = BleuStats::from_sentence(&["the", "the", "the"], &["the", "cat"]);
    ensure!(s.precisions()[0] == Some(1.0 / 3.0), "clipped unigram precision {:?}", s.precisions()[0]);
    // sacrebleu 2.6.0, floor smoothing 1e-9, effective order, no tokenization.
    let cases: [(&[&str], &[&str], f64); 2] = [
        (&["the the the"], &["the cat"], 5.50321208149105e-07),
        (
            &["the cat sat on the mat", "a dog runs"],
            &["the cat sat on a mat", "the dog runs fast"],
            0.4415034607719596,
        ),
    ];
    for (h, r, want) in cases {
        let got = lib(bleu(&toks(h), &toks(r)))?;
        ensure!((got - want).abs() < 5e-5, "{h:?}: {got} vs reference {want}");
    }

    let g = SynthGrammar::default_grammar();
    let rules = lib(g.stemmer_rules())?;
    let corpus = lib(generate(&g, 200, 3))?;
    let refs: Vec<Vec<String>> = corpus.iter().map(|s| s.target_words()).collect();
    let suffixes = g.paradigm();
    let hyps: Vec<Vec<String>> = corpus
        .iter()
        .map(|s| {
            s.target
                .iter()
                .map(|t| match t.cell {
                    Some(c) => format!("{}{}", t.stem, suffixes[(c.index() + 1) % suffixes.len()]),
                    None => t.word(),
                })
                .collect()
        })
        .collect();
    let word = lib(bleu(&hyps, &refs))?;
    let stem = lib(stem_bleu(&hyps, &refs, &rules))?;
    ensure!(stem == 1.0 && word < 1.0, "suffix corruption: stem BLEU {stem}, BLEU {word}");
    Ok(format!("bleu(x,x)=1; reference values matched; suffix-only corruption: stem BLEU 1, BLEU {word:.4}"))
}

fn run(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_morphseq"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr).trim()
    );
    Ok(out.stdout)
}

fn workflow(dir: &Path) -> Result<(), String> {
    let steps: &[&[&str]] = &[
        &["synth", "--out", "syn", "--sentences", "400", "--seed", "4"],
        &[
            "preprocess", "--src", "syn/train.src", "--tgt", "syn/train.tgt", "--out-src", "pre.src", "--out-tgt",
            "pre.tgt",
        ],
        &[
            "ibm1-filter", "--src", "pre.src", "--tgt", "pre.tgt", "--out-src", "clean.src", "--out-tgt", "clean.tgt",
            "--scores", "ibm1.scores",
        ],
        &["stem", "--input", "clean.tgt", "--output", "clean.stems", "--rules", "syn/stemmer.rules"],
        &["bpe-learn", "--input", "clean.stems", "--output", "bpe.codes", "--merges", "40"],
        &[
            "factor", "--input", "clean.tgt", "--out-stems", "st", "--out-suffixes", "sf", "--bpe", "bpe.codes",
            "--rules", "syn/stemmer.rules",
        ],
        &["vocab", "--input", "st", "--output", "stem.vocab"],
        &["vocab", "--input", "sf", "--output", "suffix.vocab", "--kind", "suffix"],
        &[
            "train", "--src", "clean.src", "--stems", "st", "--suffixes", "sf", "--out", "model", "--bpe",
            "bpe.codes", "--epochs", "2", "--embed-dim", "8", "--hidden-dim", "12", "--dropout", "0.2", "--threads",
            "1",
        ],
        &[
            "train-distributed", "--src", "clean.src", "--stems", "st", "--suffixes", "sf", "--out", "dist",
            "--epochs", "2", "--embed-dim", "8", "--hidden-dim", "12", "--workers", "2", "--sync-every", "5",
            "--threads", "1",
        ],
        &[
            "translate", "--model", "model", "--input", "syn/test_novel.src", "--output", "hyp", "--threads", "1",
        ],
        &[
            "translate", "--model", "dist", "--input", "syn/test_seen.src", "--output", "nbest", "--nbest", "2",
            "--threads", "1",
        ],
    ];
    for step in steps {
        run(dir, step)?;
    }
    let eval = run(
        dir,
        &["eval", "--hyp", "hyp", "--ref", "syn/test_novel.tgt", "--model", "model", "--rules", "syn/stemmer.rules"],
    )?;
    fs::write(dir.join("eval.txt"), eval).map_err(|e| e.to_string())
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    workflow(a.path())?;
    workflow(b.path())?;
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    ensure!(
        sa.keys().eq(sb.keys()),
        "artifact sets differ: {:?} vs {:?}",
        sa.keys().collect::<Vec<_>>(),
        sb.keys().collect::<Vec<_>>()
    );
    let differing: Vec<&String> = sa.iter().filter(|(k, v)| sb[*k] != **v).map(|(k, _)| k).collect();
    ensure!(differing.is_empty(), "artifacts differ: {differing:?}");
    let bytes: usize = sa.values().map(Vec::len).sum();
    Ok(format!("{} artifacts ({bytes} bytes) byte-identical across two runs", sa.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "gradient correctness", gradient_correctness),
        (2, "overfit", overfit),
        (3, "directional suffix claim", directional_suffix),
        (4, "cube-pruning exactness", cube_pruning_exactness),
        (5, "factoring round-trip", factoring_round_trip),
        (6, "IBM Model 1", ibm_model_1),
        (7, "distributed training", distributed_training),
        (8, "lambda contract", lambda_contract),
        (9, "BLEU sanity", bleu_sanity),
        (10, "determinism", determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, check) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {n} ({name}): {detail} [{t:.1?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {detail} [{t:.1?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
