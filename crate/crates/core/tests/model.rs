use morphseq::model::{
    distributed_train, distributed_train_shards, train, Model, ModelConfig, TrainConfig, TrainingPair,
    STEM_HEAD_PARAMS, SUFFIX_BRANCH_PARAMS,
};
use morphseq::numerics::{ParamStore, Rng, Stencil};
use morphseq::text::{BOS, EOS, NO_SUFFIX_ID};
use morphseq::Error;

fn config(lambda: f64) -> ModelConfig {
    ModelConfig {
        src_vocab: 9,
        stem_vocab: 8,
        suffix_vocab: 7,
        embed_dim: 3,
        hidden_dim: 4,
        dropout_rate: 0.0,
        lambda,
    }
}

fn tiny(seed: u64) -> Model {
    Model::with_init_scale(config(0.1), seed, 0.5).unwrap()
}

fn pair(src: &[usize], stems: &[usize], suffixes: &[usize]) -> TrainingPair {
    TrainingPair::new(src.to_vec(), stems.to_vec(), suffixes.to_vec()).unwrap()
}

fn set(model: &mut Model, name: &str, mut f: impl FnMut(usize) -> f64) {
    let t = model.params_mut().by_name_mut(name).unwrap();
    for (i, x) in t.data_mut().iter_mut().enumerate() {
        *x = f(i);
    }
}

fn param(model: &Model, name: &str) -> Vec<f64> {
    model.params().by_name(name).unwrap().data().to_vec()
}

// Plain-loop reference implementation used as an oracle.

fn matvec(w: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    assert_eq!(w.len(), rows * cols);
    (0..rows)
        .map(|i| (0..cols).map(|j| w[i * cols + j] * x[j]).sum())
        .collect()
}

fn affine(m: &Model, w: &str, b: Option<&str>, x: &[f64]) -> Vec<f64> {
    let wt = m.params().by_name(w).unwrap();
    let mut out = matvec(wt.data(), wt.rows(), x);
    if let Some(b) = b {
        for (o, bb) in out.iter_mut().zip(param(m, b)) {
            *o += bb;
        }
    }
    out
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn cat(parts: &[&[f64]]) -> Vec<f64> {
    parts.concat()
}

fn gru(m: &Model, prefix: &str, x: &[f64], h: &[f64]) -> Vec<f64> {
    let hx = cat(&[h, x]);
    let z: Vec<f64> = affine(m, &format!("{prefix}.w_update"), Some(&format!("{prefix}.b_update")), &hx)
        .into_iter()
        .map(sig)
        .collect();
    let r: Vec<f64> = affine(m, &format!("{prefix}.w_reset"), Some(&format!("{prefix}.b_reset")), &hx)
        .into_iter()
        .map(sig)
        .collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let c = affine(
        m,
        &format!("{prefix}.w_candidate"),
        Some(&format!("{prefix}.b_candidate")),
        &cat(&[&rh, x]),
    );
    (0..h.len()).map(|i| (1.0 - z[i]) * h[i] + z[i] * c[i].tanh()).collect()
}

fn embed(m: &Model, table: &str, id: usize) -> Vec<f64> {
    let e = m.config().embed_dim;
    param(m, table)[id * e..(id + 1) * e].to_vec()
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let mx = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ex: Vec<f64> = x.iter().map(|v| (v - mx).exp()).collect();
    let z: f64 = ex.iter().sum();
    ex.iter().map(|v| v / z).collect()
}

fn oracle_encode(m: &Model, src: &[usize]) -> Vec<Vec<f64>> {
    let h = m.config().hidden_dim;
    let embs: Vec<Vec<f64>> = src.iter().map(|&w| embed(m, "src_embed", w)).collect();
    let mut fwd = vec![];
    let mut s = vec![0.0; h];
    for e in &embs {
        s = gru(m, "encoder.forward", e, &s);
        fwd.push(s.clone());
    }
    let mut bwd = vec![vec![]; src.len()];
    s = vec![0.0; h];
    for (i, e) in embs.iter().enumerate().rev() {
        s = gru(m, "encoder.backward", e, &s);
        bwd[i] = s.clone();
    }
    fwd.iter().zip(&bwd).map(|(f, b)| cat(&[f, b])).collect()
}

fn oracle_attend(m: &Model, s_prev: &[f64], rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let q = affine(m, "attention.query", None, s_prev);
    let energies: Vec<f64> = rows
        .iter()
        .map(|r| {
            let k = affine(m, "attention.key", Some("attention.bias"), r);
            let t: Vec<f64> = q.iter().zip(&k).map(|(a, b)| (a + b).tanh()).collect();
            affine(m, "attention.score", None, &t)[0]
        })
        .collect();
    let alpha = softmax(&energies);
    let mut c = vec![0.0; rows[0].len()];
    for (a, r) in alpha.iter().zip(rows) {
        for (ci, ri) in c.iter_mut().zip(r) {
            *ci += a * ri;
        }
    }
    (alpha, c)
}

fn close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
    }
}

#[test]
fn encoder_shape_and_errors() {
    let m = tiny(1);
    let enc = m.encode(&[3, 4, 5, 6]).unwrap();
    assert_eq!(enc.states().shape(), &[4, 8]);
    assert_eq!(enc.len(), 4);
    assert!(matches!(m.encode(&[]), Err(Error::EmptySource)));
    assert_eq!(Error::EmptySource.to_string(), "empty source sentence");
    assert!(matches!(m.encode(&[3, 9]), Err(Error::IndexOutOfRange { .. })));
}

#[test]
fn encoder_matches_loop_oracle() {
    let m = tiny(2);
    let src = [4, 7, 3];
    let enc = m.encode(&src).unwrap();
    for (i, row) in oracle_encode(&m, &src).iter().enumerate() {
        close(enc.states().row(i), row, 1e-12);
    }
}

#[test]
fn tied_encoder_is_mirror_symmetric_on_palindromes() {
    let mut m = tiny(3);
    for suffix in ["w_update", "b_update", "w_reset", "b_reset", "w_candidate", "b_candidate"] {
        let fwd = param(&m, &format!("encoder.forward.{suffix}"));
        set(&mut m, &format!("encoder.backward.{suffix}"), |i| fwd[i]);
    }
    let src = [3, 5, 7, 5, 3];
    let enc = m.encode(&src).unwrap();
    let h = 4;
    for i in 0..src.len() {
        let j = src.len() - 1 - i;
        assert_eq!(&enc.states().row(i)[..h], &enc.states().row(j)[h..]);
    }
}

#[test]
fn single_token_source() {
    let m = tiny(4);
    let enc = m.encode(&[6]).unwrap();
    let row = enc.states().row(0).to_vec();
    let oracle = oracle_encode(&m, &[6]);
    close(&row, &oracle[0], 1e-12);
    let (alpha, c) = m.attend(enc.decoder_init(), &enc).unwrap();
    assert_eq!(alpha, vec![1.0]);
    assert_eq!(c, row);
}

#[test]
fn zero_energy_attention_is_uniform() {
    let mut m = tiny(5);
    set(&mut m, "attention.score", |_| 0.0);
    let enc = m.encode(&[3, 4, 5]).unwrap();
    let (alpha, c) = m.attend(&[0.1, -0.2, 0.3, 0.0], &enc).unwrap();
    close(&alpha, &[1.0 / 3.0; 3], 1e-15);
    let mean: Vec<f64> = (0..8)
        .map(|k| (0..3).map(|i| enc.states().row(i)[k]).sum::<f64>() / 3.0)
        .collect();
    close(&c, &mean, 1e-15);
}

#[test]
fn attention_matches_scalar_oracle() {
    let m = tiny(6);
    let src = [8, 1, 4];
    let enc = m.encode(&src).unwrap();
    let s_prev = [0.3, -0.7, 0.05, 0.9];
    let (alpha, c) = m.attend(&s_prev, &enc).unwrap();
    let (oa, oc) = oracle_attend(&m, &s_prev, &oracle_encode(&m, &src));
    close(&alpha, &oa, 1e-12);
    close(&c, &oc, 1e-12);
    assert!((alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(alpha.iter().all(|&a| a >= 0.0));
}

#[test]
fn stem_step_matches_scalar_oracle() {
    let m = tiny(7);
    let src = [2, 5, 6, 3];
    let enc = m.encode(&src).unwrap();
    let (dist, state) = m.decode_step_stem(BOS, enc.decoder_init(), &enc, 0).unwrap();

    let rows = oracle_encode(&m, &src);
    let h = m.config().hidden_dim;
    let mean: Vec<f64> = (0..2 * h)
        .map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / rows.len() as f64)
        .collect();
    let s0: Vec<f64> = affine(&m, "decoder.init.w", Some("decoder.init.b"), &mean)
        .into_iter()
        .map(f64::tanh)
        .collect();
    close(enc.decoder_init(), &s0, 1e-12);
    let (alpha, c) = oracle_attend(&m, &s0, &rows);
    let emb = embed(&m, "stem_embed", BOS);
    let s1 = gru(&m, "decoder.gru", &cat(&[&emb, &c]), &s0);
    let o: Vec<f64> = affine(&m, "stem_output.w", Some("stem_output.b"), &cat(&[&emb, &s1, &c]))
        .into_iter()
        .map(f64::tanh)
        .collect();
    let p = softmax(&affine(&m, "stem_head.w", Some("stem_head.b"), &o));

    close(state.attention(), &alpha, 1e-12);
    close(state.context(), &c, 1e-12);
    close(state.state(), &s1, 1e-12);
    close(state.stem_output(), &o, 1e-12);
    close(dist.data(), &p, 1e-12);
    assert!((dist.data().iter().sum::<f64>() - 1.0).abs() <= 1e-12);

    let y = 5;
    let pred = m.decode_step_suffix(&state, y, 0).unwrap();
    let hs: Vec<f64> = affine(
        &m,
        "suffix_hidden.w",
        Some("suffix_hidden.b"),
        &cat(&[&s1, &embed(&m, "stem_embed", y), &c]),
    )
    .into_iter()
    .map(f64::tanh)
    .collect();
    close(&pred.suffix_state, &hs, 1e-12);
    close(pred.dist.data(), &softmax(&affine(&m, "suffix_head.w", Some("suffix_head.b"), &hs)), 1e-12);
    assert!((pred.dist.data().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn zero_output_weights_give_uniform_distributions() {
    let mut m = tiny(8);
    for name in ["stem_head.w", "stem_head.b", "suffix_head.w", "suffix_head.b"] {
        set(&mut m, name, |_| 0.0);
    }
    let enc = m.encode(&[3, 4]).unwrap();
    let (dist, state) = m.decode_step_stem(BOS, enc.decoder_init(), &enc, 0).unwrap();
    close(dist.data(), &[1.0 / 8.0; 8], 1e-15);
    let pred = m.decode_step_suffix(&state, 4, 0).unwrap();
    close(pred.dist.data(), &[1.0 / 7.0; 7], 1e-15);
}

#[test]
fn step_errors() {
    let m = tiny(9);
    let enc = m.encode(&[3, 4]).unwrap();
    assert!(matches!(
        m.decode_step_stem(8, enc.decoder_init(), &enc, 0),
        Err(Error::IndexOutOfRange { .. })
    ));
    let (_, state) = m.decode_step_stem(BOS, enc.decoder_init(), &enc, 2).unwrap();
    assert!(matches!(
        m.decode_step_suffix(&state, 4, 3),
        Err(Error::StaleState { state_step: 2, step: 3 })
    ));
}

#[test]
fn chosen_stem_reaches_suffix_head() {
    let m = tiny(10);
    let enc = m.encode(&[3, 4, 5]).unwrap();
    let (_, state) = m.decode_step_stem(BOS, enc.decoder_init(), &enc, 0).unwrap();
    let a = m.decode_step_suffix(&state, 4, 0).unwrap();
    let b = m.decode_step_suffix(&state, 5, 0).unwrap();
    assert_ne!(a.dist.data(), b.dist.data());
}

#[test]
fn context_is_shared_between_heads() {
    let m = tiny(11);
    let enc = m.encode(&[3, 4, 5]).unwrap();
    let mut s = enc.decoder_init().to_vec();
    let mut y = BOS;
    for t in 0..4 {
        let (_, expected_ctx) = m.attend(&s, &enc).unwrap();
        let (dist, state) = m.decode_step_stem(y, &s, &enc, t).unwrap();
        let pred = m.decode_step_suffix(&state, 4, t).unwrap();
        assert_eq!(state.context(), expected_ctx.as_slice());
        assert_eq!(pred.context.as_slice(), state.context());
        y = dist.argmax().unwrap();
        s = state.state().to_vec();
    }
}

fn greedy_stem_dists(m: &Model, src: &[usize]) -> Vec<Vec<f64>> {
    let enc = m.encode(src).unwrap();
    let mut s = enc.decoder_init().to_vec();
    let mut y = BOS;
    let mut out = vec![];
    for t in 0..6 {
        let (dist, state) = m.decode_step_stem(y, &s, &enc, t).unwrap();
        out.push(dist.data().to_vec());
        y = (t + 3) % 8;
        s = state.state().to_vec();
    }
    out
}

#[test]
fn suffix_parameters_never_reach_stem_distributions() {
    let m = tiny(12);
    let before = greedy_stem_dists(&m, &[3, 6, 2, 4]);
    let mut perturbed = m.clone();
    let mut rng = Rng::new(99);
    for name in SUFFIX_BRANCH_PARAMS {
        set(&mut perturbed, name, |_| rng.uniform(-3.0, 3.0));
    }
    assert_eq!(before, greedy_stem_dists(&perturbed, &[3, 6, 2, 4]));
}

#[test]
fn loss_interpolation_contract() {
    let src = [3, 4, 5];
    let (stems, sufs) = ([4, 5, 6], [3, 4, 5]);
    let m = tiny(13);
    let l0 = m.forward_loss(&src, &stems, &sufs, 0.0).unwrap();
    assert_eq!(l0.total, l0.stem);
    let l1 = m.forward_loss(&src, &stems, &sufs, 1.0).unwrap();
    assert_eq!(l1.total, l1.suffix);
    for lambda in [0.1, 0.37, 0.8] {
        let l = m.forward_loss(&src, &stems, &sufs, lambda).unwrap();
        assert_eq!(l.total, (1.0 - lambda) * l.stem + lambda * l.suffix);
        assert_eq!((l.stem, l.suffix), (l0.stem, l0.suffix));
    }
    assert!(matches!(
        m.forward_loss(&src, &stems, &sufs[..2], 0.1),
        Err(Error::LengthMismatch(_))
    ));
}

#[test]
fn loss_is_mean_nll_over_stems_and_eos() {
    let m = tiny(14);
    let src = [3, 4];
    let (stems, sufs) = ([5, 6], [4, 3]);
    let l = m.forward_loss(&src, &stems, &sufs, 0.1).unwrap();

    let enc = m.encode(&src).unwrap();
    let mut s = enc.decoder_init().to_vec();
    let mut y = BOS;
    let (mut ls, mut lf) = (0.0, 0.0);
    for (t, (&gs, &gf)) in stems.iter().chain([&EOS]).zip(sufs.iter().chain([&NO_SUFFIX_ID])).enumerate() {
        let (dist, state) = m.decode_step_stem(y, &s, &enc, t).unwrap();
        let pred = m.decode_step_suffix(&state, gs, t).unwrap();
        ls -= (dist.data()[gs] + 1e-12).ln();
        lf -= (pred.dist.data()[gf] + 1e-12).ln();
        y = gs;
        s = state.state().to_vec();
    }
    assert!((l.stem - ls / 3.0).abs() < 1e-12);
    assert!((l.suffix - lf / 3.0).abs() < 1e-12);
}

#[test]
fn confident_correct_model_has_zero_loss() {
    let mut m = tiny(15);
    for name in ["stem_head.w", "suffix_head.w"] {
        set(&mut m, name, |_| 0.0);
    }
    set(&mut m, "stem_head.b", |i| if i == EOS { 1e3 } else { 0.0 });
    set(&mut m, "suffix_head.b", |i| if i == NO_SUFFIX_ID { 1e3 } else { 0.0 });
    let l = m.forward_loss(&[3, 4], &[], &[], 0.1).unwrap();
    assert!(l.total.abs() < 1e-11, "{l:?}");
}

#[test]
fn gradients_match_finite_differences() {
    let p = pair(&[3, 4, 5], &[4, 5], &[3, 6]);
    let q = pair(&[6, 2], &[7, 3, 4], &[4, 3, 5]);
    for seed in [16, 30, 31] {
        let m = tiny(seed);
        assert!(m.params().num_scalars() <= 10_000);
        let five = m.gradient_check_with(&[&p, &q], 0.3, 1e-3, Stencil::FivePoint).unwrap();
        assert!(five.max_relative_error < 1e-4, "{five:?}");
        assert_eq!(five.coordinates, m.params().num_scalars());
        // Two-point differences at h = 1e-5 sit at the roundoff floor.
        let central = m.gradient_check(&[&p, &q], 0.3, 1e-5).unwrap();
        assert!(central.max_abs_error < 1e-9, "{central:?}");
    }
}

#[test]
fn lambda_bounds_cut_gradient_paths() {
    let m = tiny(17);
    let p = pair(&[3, 4, 5], &[4, 5], &[3, 6]);
    let (_, g0, _) = m.loss_and_gradients(&[&p], 0.0, None).unwrap();
    for name in SUFFIX_BRANCH_PARAMS {
        let id = m.params().id(name).unwrap();
        assert!(g0.dense(id, 1).iter().all(|&x| x == 0.0), "{name}");
    }
    let (_, g1, _) = m.loss_and_gradients(&[&p], 1.0, None).unwrap();
    for name in STEM_HEAD_PARAMS {
        let id = m.params().id(name).unwrap();
        assert!(g1.dense(id, 1).iter().all(|&x| x == 0.0), "{name}");
    }
}

fn toy_corpus(n: usize, seed: u64) -> Vec<TrainingPair> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let len = 1 + rng.below(3);
            let src: Vec<usize> = (0..len).map(|_| 3 + rng.below(6)).collect();
            let stems: Vec<usize> = src.iter().map(|&w| 3 + (w - 3 + 1) % 5).collect();
            let sufs: Vec<usize> = src.iter().map(|&w| 3 + w % 4).collect();
            pair(&src, &stems, &sufs)
        })
        .collect()
}

fn train_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        embed_dim: 3,
        hidden_dim: 4,
        dropout: 0.0,
        epochs,
        batch_size: 4,
        learning_rate: 0.01,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic_and_finite() {
    let corpus = toy_corpus(12, 1);
    let cfg = train_config(3);
    let run = || {
        let mut seen = vec![];
        let out = train(tiny(20), &corpus, &cfg, |e, _| {
            seen.push(e.epoch);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![1, 2, 3]);
        out
    };
    let a = run();
    let b = run();
    assert_eq!(a.curve, b.curve);
    assert!(a.model.params().bit_identical(b.model.params()));
    assert!(a.curve.iter().all(|e| e.loss.total.is_finite()));
    for e in &a.curve {
        assert_eq!(e.loss.total, 0.9 * e.loss.stem + 0.1 * e.loss.suffix);
    }
    assert!(matches!(train(tiny(20), &[], &cfg, |_, _| Ok(())), Err(Error::EmptyCorpus)));
}

#[test]
fn training_with_dropout_is_deterministic() {
    let corpus = toy_corpus(8, 2);
    let mut cfg = train_config(2);
    cfg.dropout = 0.3;
    let mut mc = config(0.1);
    mc.dropout_rate = 0.3;
    let run = || train(Model::new(mc.clone(), 3).unwrap(), &corpus, &cfg, |_, _| Ok(())).unwrap();
    assert!(run().model.params().bit_identical(run().model.params()));
}

#[test]
fn training_reduces_loss() {
    let corpus = toy_corpus(16, 3);
    let out = train(tiny(21), &corpus, &train_config(30), |_, _| Ok(())).unwrap();
    let first = out.curve.first().unwrap().loss.total;
    let last = out.curve.last().unwrap().loss.total;
    assert!(last < 0.5 * first, "{first} -> {last}");
}

#[test]
fn one_worker_is_bit_identical_to_train() {
    let corpus = toy_corpus(10, 4);
    let mut cfg = train_config(4);
    cfg.sync_every = 2;
    let single = train(tiny(22), &corpus, &cfg, |_, _| Ok(())).unwrap();
    let dist = distributed_train(tiny(22), &corpus, &cfg).unwrap();
    assert!(dist.model.params().bit_identical(single.model.params()));
    assert_eq!(dist.curve, single.curve);
    assert!(dist.syncs > 1);
}

#[test]
fn identical_workers_average_to_each_worker() {
    let corpus = toy_corpus(10, 5);
    let mut cfg = train_config(3);
    cfg.sync_every = 2;
    cfg.threads = 2;
    let out = distributed_train_shards(tiny(23), &[&corpus, &corpus], &[7, 7], &cfg).unwrap();
    assert_eq!(out.worker_params.len(), 2);
    for w in &out.worker_params {
        assert!(out.model.params().bit_identical(w));
    }
}

#[test]
fn distributed_errors_and_thread_independence() {
    let corpus = toy_corpus(6, 6);
    let mut cfg = train_config(2);
    cfg.workers = 7;
    assert!(distributed_train(tiny(24), &corpus, &cfg).is_err());
    cfg.workers = 3;
    cfg.sync_every = 1;
    let a = distributed_train(tiny(24), &corpus, &cfg).unwrap();
    cfg.threads = 3;
    let b = distributed_train(tiny(24), &corpus, &cfg).unwrap();
    assert!(a.model.params().bit_identical(b.model.params()));
    assert_eq!(a.curve, b.curve);
}

#[test]
fn from_params_checks_layout() {
    let m = tiny(25);
    let mut params: ParamStore = m.params().clone();
    assert!(Model::from_params(config(0.1), params.clone()).is_ok());
    let mut wrong = config(0.1);
    wrong.hidden_dim = 5;
    assert!(matches!(
        Model::from_params(wrong, params.clone()),
        Err(Error::ShapeMismatch { .. })
    ));
    params = ParamStore::new();
    assert!(matches!(
        Model::from_params(config(0.1), params),
        Err(Error::UnknownParameter(_))
    ));
}
