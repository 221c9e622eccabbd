use std::fs;
use std::path::Path;

use morphseq::decoder::{beam_search, finalize, finalize_tokens, BeamConfig, Hypothesis};
use morphseq::eval::{bleu_stats, coverage, stem_bleu};
use morphseq::model::{
    distributed_train, encode_pairs, train, EpochLoss, Model, ModelConfig, TrainConfig, TrainingPair, Vocabs,
};
use morphseq::numerics::{load_checkpoint, save_checkpoint, Rng, Stencil};
use morphseq::synth::{generate, holdout_split, SynthGrammar, SynthSentence};
use morphseq::text::io::{read_lines, read_tokenized, write_lines, write_tokenized};
use morphseq::text::{
    apply_bpe_with_suffix_adjust, build_vocab, factor_sentence, ibm1_score_and_filter, ibm1_train, learn_bpe,
    length_filter, preprocess, BpeModel, EntityRules, FactoredTokens, StemmerRules, VocabKind, Vocabulary,
    CONTINUATION_MARKER, NO_SUFFIX,
};
use morphseq::error::file_error;
use morphseq::{Error, Result};
use rayon::prelude::*;

use crate::manifest::RunManifest;
use crate::{
    BpeLearnArgs, Command, EvalArgs, FactorArgs, GradcheckArgs, Ibm1FilterArgs, Kind, PreprocessArgs, RulesArg,
    StemArgs, StencilArg, SynthArgs, TrainArgs, TranslateArgs, VocabArgs,
};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Preprocess(a) => preprocess_cmd(a),
        Command::Stem(a) => stem_cmd(a),
        Command::BpeLearn(a) => bpe_learn_cmd(a),
        Command::Factor(a) => factor_cmd(a),
        Command::Vocab(a) => vocab_cmd(a),
        Command::Ibm1Filter(a) => ibm1_cmd(a),
        Command::Train(a) => train_cmd(a, false),
        Command::TrainDistributed(a) => train_cmd(a, true),
        Command::Translate(a) => translate_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Synth(a) => synth_cmd(a),
        Command::Gradcheck(a) => gradcheck_cmd(a),
    }
}

fn read_text(path: impl AsRef<Path>) -> Result<String> {
    fs::read_to_string(path.as_ref()).map_err(file_error(path))
}

fn write_text(path: impl AsRef<Path>, text: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path.as_ref(), text).map_err(file_error(path))
}

fn load_rules(a: &RulesArg) -> Result<StemmerRules> {
    match &a.rules {
        Some(p) => StemmerRules::parse(&read_text(p)?),
        None => Ok(StemmerRules::russian()),
    }
}

fn rules_manifest(m: RunManifest, a: &RulesArg) -> RunManifest {
    match &a.rules {
        Some(p) => m.input(p),
        None => m.setting("rules", "built-in russian"),
    }
}

fn ensure_same_len(what: &str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(format!("{what}: {a} vs {b} lines")));
    }
    Ok(())
}

fn preprocess_cmd(a: PreprocessArgs) -> Result<()> {
    let entities = match &a.entities {
        Some(p) => EntityRules::parse(&read_text(p)?)?,
        None => EntityRules::default(),
    };
    let src = read_lines(&a.src)?;
    let tgt = read_lines(&a.tgt)?;
    ensure_same_len("source/target", src.len(), tgt.len())?;
    let mut out_s = Vec::new();
    let mut out_t = Vec::new();
    for (s, t) in src.iter().zip(&tgt) {
        let (s, t) = (preprocess(s, &entities), preprocess(t, &entities));
        if length_filter(&s, &t, a.min_len, a.max_len) {
            out_s.push(s);
            out_t.push(t);
        }
    }
    log::info!("kept {} of {} pairs", out_s.len(), src.len());
    write_tokenized(&a.out_src, &out_s)?;
    write_tokenized(&a.out_tgt, &out_t)?;
    let mut m = RunManifest::new("preprocess").input(&a.src).input(&a.tgt);
    if let Some(p) = &a.entities {
        m = m.input(p);
    }
    m.output(&a.out_src)
        .output(&a.out_tgt)
        .setting("min_len", a.min_len)
        .setting("max_len", a.max_len)
        .setting("kept", out_s.len())
        .write_beside(&a.out_src)
}

fn stem_cmd(a: StemArgs) -> Result<()> {
    let rules = load_rules(&a.rules)?;
    let stems: Vec<Vec<String>> = read_tokenized(&a.input)?
        .iter()
        .map(|s| s.iter().map(|w| rules.stem_word(w).stem).collect())
        .collect();
    write_tokenized(&a.output, &stems)?;
    rules_manifest(RunManifest::new("stem").input(&a.input), &a.rules)
        .output(&a.output)
        .write_beside(&a.output)
}

fn bpe_learn_cmd(a: BpeLearnArgs) -> Result<()> {
    let corpus = read_tokenized(&a.input)?;
    let model = learn_bpe(&corpus, a.merges);
    log::info!("learned {} merges", model.merges().len());
    write_text(&a.output, model.to_text())?;
    RunManifest::new("bpe-learn")
        .input(&a.input)
        .output(&a.output)
        .setting("merges", a.merges)
        .write_beside(&a.output)
}

fn factor_cmd(a: FactorArgs) -> Result<()> {
    let rules = load_rules(&a.rules)?;
    let bpe = a.bpe.as_ref().map(|p| BpeModel::parse(&read_text(p)?)).transpose()?;
    let mut stems = Vec::new();
    let mut suffixes = Vec::new();
    for sent in read_tokenized(&a.input)? {
        let mut f = factor_sentence(&sent, &rules);
        if let Some(b) = &bpe {
            f = apply_bpe_with_suffix_adjust(&f, b)?;
        }
        let (s, x) = f.into_parts();
        stems.push(s);
        suffixes.push(x);
    }
    write_tokenized(&a.out_stems, &stems)?;
    write_tokenized(&a.out_suffixes, &suffixes)?;
    let mut m = rules_manifest(RunManifest::new("factor").input(&a.input), &a.rules);
    if let Some(p) = &a.bpe {
        m = m.input(p);
    }
    m.output(&a.out_stems).output(&a.out_suffixes).write_beside(&a.out_stems)
}

fn vocab_cmd(a: VocabArgs) -> Result<()> {
    let kind = match a.kind {
        Kind::Plain => VocabKind::Plain,
        Kind::Suffix => VocabKind::Suffix,
    };
    let v = build_vocab(&read_tokenized(&a.input)?, a.size, kind)?;
    write_text(&a.output, v.to_text())?;
    RunManifest::new("vocab")
        .input(&a.input)
        .output(&a.output)
        .setting("size", a.size)
        .setting("kind", format!("{:?}", a.kind).to_lowercase())
        .write_beside(&a.output)
}

fn ibm1_cmd(a: Ibm1FilterArgs) -> Result<()> {
    let src = read_tokenized(&a.src)?;
    let tgt = read_tokenized(&a.tgt)?;
    ensure_same_len("source/target", src.len(), tgt.len())?;
    let pairs: Vec<(Vec<String>, Vec<String>)> = src.into_iter().zip(tgt).collect();
    let model = ibm1_train(&pairs, a.iterations)?;
    if let Some(p) = &a.scores {
        write_lines(p, pairs.iter().map(|(s, t)| format!("{}", model.score(s, t))))?;
    }
    let kept = ibm1_score_and_filter(&pairs, &model, a.threshold);
    log::info!("kept {} of {} pairs", kept.len(), pairs.len());
    let (ks, kt): (Vec<_>, Vec<_>) = kept.into_iter().unzip();
    write_tokenized(&a.out_src, &ks)?;
    write_tokenized(&a.out_tgt, &kt)?;
    let mut m = RunManifest::new("ibm1-filter")
        .input(&a.src)
        .input(&a.tgt)
        .output(&a.out_src)
        .output(&a.out_tgt);
    if let Some(p) = &a.scores {
        m = m.output(p);
    }
    m.setting("iterations", a.iterations)
        .setting("threshold", a.threshold)
        .setting("kept", ks.len())
        .write_beside(&a.out_src)
}

fn train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &a.config {
        Some(p) => TrainConfig::parse(&read_text(p)?)?,
        None => TrainConfig::default(),
    };
    macro_rules! override_with {
        ($($field:ident),*) => {
            $(if let Some(v) = a.$field {
                cfg.$field = v;
            })*
        };
    }
    override_with!(
        seed,
        lambda,
        threads,
        workers,
        sync_every,
        epochs,
        batch_size,
        embed_dim,
        hidden_dim,
        dropout,
        learning_rate
    );
    cfg.validate()?;
    Ok(cfg)
}

fn read_factored(src: &Path, stems: &Path, suffixes: &Path) -> Result<(Vec<Vec<String>>, Vec<FactoredTokens>)> {
    let src = read_tokenized(src)?;
    let stems = read_tokenized(stems)?;
    let suffixes = read_tokenized(suffixes)?;
    ensure_same_len("source/stems", src.len(), stems.len())?;
    ensure_same_len("stems/suffixes", stems.len(), suffixes.len())?;
    let tgt = stems
        .into_iter()
        .zip(suffixes)
        .map(|(s, x)| FactoredTokens::new(s, x))
        .collect::<Result<_>>()?;
    Ok((src, tgt))
}

fn write_curve(path: &Path, curve: &[EpochLoss]) -> Result<()> {
    let mut lines = vec!["epoch,L,L_stem,L_suffix".to_string()];
    lines.extend(
        curve
            .iter()
            .map(|e| format!("{},{},{},{}", e.epoch, e.loss.total, e.loss.stem, e.loss.suffix)),
    );
    write_lines(path, lines)
}

fn train_cmd(a: TrainArgs, distributed: bool) -> Result<()> {
    let cfg = train_config(&a)?;
    let (src, tgt) = read_factored(&a.src, &a.stems, &a.suffixes)?;
    let vocabs = Vocabs::build(&src, &tgt, (cfg.src_vocab_size, cfg.stem_vocab_size, cfg.suffix_vocab_size))?;
    let pairs = encode_pairs(&vocabs, &src, &tgt)?;
    fs::create_dir_all(&a.out).map_err(file_error(&a.out))?;
    vocabs.save(&a.out)?;
    write_text(a.out.join("config.txt"), cfg.to_text())?;
    if let Some(b) = &a.bpe {
        fs::copy(b, a.out.join("bpe.codes")).map_err(file_error(b))?;
    }
    let model = Model::new(model_config(&cfg, &vocabs), cfg.seed)?;
    log::info!(
        "{} pairs, vocabularies {}/{}/{}, {} parameters",
        pairs.len(),
        vocabs.src.len(),
        vocabs.stem.len(),
        vocabs.suffix.len(),
        model.params().num_scalars()
    );
    let (model, curve) = if distributed {
        let out = distributed_train(model, &pairs, &cfg)?;
        (out.model, out.curve)
    } else {
        let out = train(model, &pairs, &cfg, |e, m| {
            log::info!("epoch {} L={} L_stem={} L_suffix={}", e.epoch, e.loss.total, e.loss.stem, e.loss.suffix);
            if !a.no_epoch_checkpoints {
                save_checkpoint(m.params(), a.out.join(format!("epoch-{}.msq", e.epoch)))?;
            }
            Ok(())
        })?;
        (out.model, out.curve)
    };
    save_checkpoint(model.params(), a.out.join("model.msq"))?;
    write_curve(&a.out.join("loss.csv"), &curve)?;

    let name = if distributed { "train-distributed" } else { "train" };
    let mut m = RunManifest::new(name).input(&a.src).input(&a.stems).input(&a.suffixes);
    m.config = a.config.clone();
    m.seed = Some(cfg.seed);
    if let Some(b) = &a.bpe {
        m = m.input(b);
    }
    m = m.output(&a.out.join("model.msq")).output(&a.out.join("loss.csv"));
    if distributed {
        m = m.setting("workers", cfg.workers).setting("sync_every", cfg.sync_every);
    }
    m.setting("pairs", pairs.len()).write_in(&a.out)
}

fn model_config(cfg: &TrainConfig, vocabs: &Vocabs) -> ModelConfig {
    cfg.model_config(vocabs.src.len(), vocabs.stem.len(), vocabs.suffix.len())
}

struct ModelDir {
    vocabs: Vocabs,
    model: Model,
}

fn load_model_dir(dir: &Path) -> Result<ModelDir> {
    let cfg = TrainConfig::parse(&read_text(dir.join("config.txt"))?)?;
    let vocabs = Vocabs::load(dir)?;
    let params = load_checkpoint(dir.join("model.msq"))?;
    let model = Model::from_params(model_config(&cfg, &vocabs), params)?;
    Ok(ModelDir { vocabs, model })
}

/// Words of `h`, dropping any suffix a non-final fragment was given.
fn surface_lenient(h: &Hypothesis, v: &Vocabs) -> Vec<String> {
    let n = h.len().saturating_sub(usize::from(h.is_finished()));
    let stems = v.stem.decode(&h.substems()[..n]);
    let suffixes: Vec<String> = v
        .suffix
        .decode(&h.suffixes()[..n])
        .into_iter()
        .zip(&stems)
        .map(|(x, s)| if s.ends_with(CONTINUATION_MARKER) { NO_SUFFIX.to_string() } else { x })
        .collect();
    finalize_tokens(&stems, &suffixes).unwrap_or_default()
}

fn translate_line(line: &str, dir: &ModelDir, cfg: &BeamConfig, nbest: Option<usize>, index: usize) -> Result<Vec<String>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.is_empty() {
        return Ok(if nbest.is_some() { Vec::new() } else { vec![String::new()] });
    }
    let src = dir.vocabs.src.encode(&toks);
    let hyps = beam_search(&src, &dir.model, cfg)?;
    let words = |h: &Hypothesis| finalize(h, &dir.vocabs.stem, &dir.vocabs.suffix);
    match nbest {
        Some(k) => Ok(hyps
            .iter()
            .take(k)
            .map(|h| {
                let w = words(h).unwrap_or_else(|_| surface_lenient(h, &dir.vocabs));
                format!("{index} ||| {} ||| {}", w.join(" "), h.normalized_score(cfg.length_norm_alpha))
            })
            .collect()),
        None => {
            let best = hyps
                .iter()
                .find_map(|h| words(h).ok())
                .unwrap_or_else(|| {
                    log::warn!("line {index}: no hypothesis with aligned suffixes");
                    surface_lenient(&hyps[0], &dir.vocabs)
                });
            Ok(vec![best.join(" ")])
        }
    }
}

fn translate_cmd(a: TranslateArgs) -> Result<()> {
    let dir = load_model_dir(&a.model)?;
    let cfg = BeamConfig {
        beam_size: a.beam.max(a.nbest.unwrap_or(0)),
        max_len: a.max_len,
        length_norm_alpha: a.alpha,
    };
    cfg.validate()?;
    let lines = read_lines(&a.input)?;
    let one = |(i, l): (usize, &String)| translate_line(l, &dir, &cfg, a.nbest, i);
    let out: Vec<Vec<String>> = if a.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(a.threads)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        pool.install(|| lines.par_iter().enumerate().map(one).collect::<Result<_>>())?
    } else {
        lines.iter().enumerate().map(one).collect::<Result<_>>()?
    };
    write_lines(&a.output, out.into_iter().flatten())?;
    let mut m = RunManifest::new("translate")
        .input(&a.model)
        .input(&a.input)
        .output(&a.output)
        .setting("beam", cfg.beam_size)
        .setting("max_len", cfg.max_len)
        .setting("alpha", cfg.length_norm_alpha);
    if let Some(k) = a.nbest {
        m = m.setting("nbest", k);
    }
    m.write_beside(&a.output)
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let hyps = read_tokenized(&a.hyp)?;
    let refs = read_tokenized(&a.reference)?;
    let rules = load_rules(&a.rules)?;
    let stats = bleu_stats(&hyps, &refs)?;
    let sb = stem_bleu(&hyps, &refs, &rules)?;
    let cov = if let Some(p) = &a.vocab {
        coverage(&refs, &Vocabulary::parse(&read_text(p)?, VocabKind::Plain)?)?
    } else {
        let dir = a.model.as_ref().expect("clap requires --vocab or --model");
        let vocabs = Vocabs::load(dir)?;
        let codes = dir.join("bpe.codes");
        let bpe = if codes.exists() {
            Some(BpeModel::parse(&read_text(codes)?)?)
        } else {
            None
        };
        let mut stems = Vec::with_capacity(refs.len());
        for r in &refs {
            let mut f = factor_sentence(r, &rules);
            if let Some(b) = &bpe {
                f = apply_bpe_with_suffix_adjust(&f, b)?;
            }
            stems.push(f.stems().to_vec());
        }
        coverage(&stems, &vocabs.stem)?
    };
    println!("# single reference, whitespace tokens as given (lowercased by preprocess)");
    println!("BLEU={} stemBLEU={} coverage={}", stats.score(), sb, cov);
    let p: Vec<String> = stats
        .precisions()
        .iter()
        .enumerate()
        .map(|(i, p)| format!("p{}={}", i + 1, p.map_or("n/a".to_string(), |x| x.to_string())))
        .collect();
    println!(
        "{} BP={} hyp_len={} ref_len={}",
        p.join(" "),
        stats.brevity_penalty(),
        stats.hyp_len,
        stats.ref_len
    );
    Ok(())
}

fn write_split(dir: &Path, name: &str, sents: &[SynthSentence], held_out: &std::collections::BTreeSet<(String, morphseq::synth::Cell)>) -> Result<()> {
    let src: Vec<Vec<String>> = sents.iter().map(|s| s.source.clone()).collect();
    let tgt: Vec<Vec<String>> = sents.iter().map(SynthSentence::target_words).collect();
    write_tokenized(dir.join(format!("{name}.src")), &src)?;
    write_tokenized(dir.join(format!("{name}.tgt")), &tgt)?;
    write_lines(
        dir.join(format!("{name}.novel")),
        sents.iter().map(|s| {
            s.positions_in(held_out)
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        }),
    )
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let grammar = match &a.grammar {
        Some(p) => SynthGrammar::parse(&read_text(p)?)?,
        None => SynthGrammar::default_grammar(),
    };
    let corpus = generate(&grammar, a.sentences, a.seed)?;
    let split = holdout_split(&corpus, &grammar, a.seed)?;
    fs::create_dir_all(&a.out).map_err(file_error(&a.out))?;
    write_split(&a.out, "train", &split.train, &split.held_out)?;
    write_split(&a.out, "test_seen", &split.test_seen, &split.held_out)?;
    write_split(&a.out, "test_novel", &split.test_novel, &split.held_out)?;
    write_lines(
        a.out.join("held_out.txt"),
        split.held_out.iter().map(|(stem, cell)| format!("{stem}\t{cell}")),
    )?;
    write_text(a.out.join("stemmer.rules"), grammar.stemmer_rules()?.to_string())?;
    let mut m = RunManifest::new("synth");
    if let Some(p) = &a.grammar {
        m = m.input(p);
    }
    m.seed = Some(a.seed);
    m.setting("sentences", a.sentences)
        .setting("train", split.train.len())
        .setting("test_seen", split.test_seen.len())
        .setting("test_novel", split.test_novel.len())
        .setting("novel_forms", split.novel_items().len())
        .output(&a.out)
        .write_in(&a.out)
}

fn gradcheck_cmd(a: GradcheckArgs) -> Result<()> {
    let cfg = ModelConfig {
        src_vocab: 7,
        stem_vocab: 8,
        suffix_vocab: 7,
        embed_dim: a.embed_dim,
        hidden_dim: a.hidden_dim,
        dropout_rate: 0.0,
        lambda: a.lambda,
    };
    let model = Model::with_init_scale(cfg, a.seed, 0.5)?;
    let mut rng = Rng::with_stream(a.seed, 7);
    let mut pairs = Vec::new();
    for _ in 0..3 {
        let m = 1 + rng.below(4);
        let n = rng.below(4);
        let src = (0..m).map(|_| 3 + rng.below(4)).collect();
        let stems = (0..n).map(|_| 3 + rng.below(5)).collect();
        let sufs = (0..n).map(|_| 3 + rng.below(4)).collect();
        pairs.push(TrainingPair::new(src, stems, sufs)?);
    }
    let refs: Vec<&TrainingPair> = pairs.iter().collect();
    let stencil = match a.stencil {
        StencilArg::Central => Stencil::Central,
        StencilArg::FivePoint => Stencil::FivePoint,
    };
    let report = model.gradient_check_with(&refs, a.lambda, a.step, stencil)?;
    let worst = report
        .worst
        .as_ref()
        .map_or("none".to_string(), |(n, i)| format!("{n}[{i}]"));
    println!(
        "max_relative_error={} max_abs_error={} coordinates={} worst={}",
        report.max_relative_error, report.max_abs_error, report.coordinates, worst
    );
    if report.max_relative_error >= a.tolerance {
        return Err(Error::InvalidArgument(format!(
            "gradient check failed: {} >= {}",
            report.max_relative_error, a.tolerance
        )));
    }
    Ok(())
}
