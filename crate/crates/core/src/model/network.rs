use super::config::{ModelConfig, DEFAULT_INIT_SCALE};
use super::data::TrainingPair;
use crate::error::{Error, Result};
use crate::numerics::{finite_diff_check_with, GradCheckReport, Gradients, Graph, GruParams, GruWeights, ParamId, ParamStore, Rng, Stencil, Tensor, Var};
use crate::text::{BOS, EOS, NO_SUFFIX_ID};

const INIT_STREAM: u64 = 0;

/// Parameters used only by the suffix prediction branch.
pub const SUFFIX_BRANCH_PARAMS: &[&str] = &[
    "suffix_hidden.w",
    "suffix_hidden.b",
    "suffix_head.w",
    "suffix_head.b",
];

/// Parameters used only by the stem prediction head.
pub const STEM_HEAD_PARAMS: &[&str] = &["stem_output.w", "stem_output.b", "stem_head.w", "stem_head.b"];

#[derive(Debug, Clone, Copy)]
struct Ids {
    src_embed: ParamId,
    enc_fwd: GruParams,
    enc_bwd: GruParams,
    init_w: ParamId,
    init_b: ParamId,
    att_query: ParamId,
    att_key: ParamId,
    att_bias: ParamId,
    att_score: ParamId,
    stem_embed: ParamId,
    dec: GruParams,
    out_w: ParamId,
    out_b: ParamId,
    stem_w: ParamId,
    stem_b: ParamId,
    sfx_hidden_w: ParamId,
    sfx_hidden_b: ParamId,
    sfx_w: ParamId,
    sfx_b: ParamId,
}

/// Mean per-token losses of one batch or sentence.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub stem: f64,
    pub suffix: f64,
}

/// Encoder output for one source sentence.
#[derive(Debug, Clone)]
pub struct EncoderState {
    states: Tensor,
    keys: Tensor,
    init: Vec<f64>,
}

impl EncoderState {
    /// Bidirectional states, one row of width `2H` per source token.
    pub fn states(&self) -> &Tensor {
        &self.states
    }

    /// Projected attention keys, one row of width `H` per source token.
    pub fn keys(&self) -> &Tensor {
        &self.keys
    }

    /// Decoder state before the first step.
    pub fn decoder_init(&self) -> &[f64] {
        &self.init
    }

    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// What one stem step leaves behind for the suffix head.
#[derive(Debug, Clone)]
pub struct DecoderStepState {
    step: usize,
    prev_stem: usize,
    state: Vec<f64>,
    context: Vec<f64>,
    attention: Vec<f64>,
    stem_output: Vec<f64>,
}

impl DecoderStepState {
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn prev_stem(&self) -> usize {
        self.prev_stem
    }

    /// Decoder state after this step.
    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn context(&self) -> &[f64] {
        &self.context
    }

    pub fn attention(&self) -> &[f64] {
        &self.attention
    }

    /// Hidden layer the stem head reads from.
    pub fn stem_output(&self) -> &[f64] {
        &self.stem_output
    }
}

#[derive(Debug, Clone)]
pub struct SuffixPrediction {
    pub dist: Tensor,
    pub suffix_state: Vec<f64>,
    /// The context vector the prediction was conditioned on.
    pub context: Vec<f64>,
}

pub(crate) struct Dropout<'r> {
    pub rate: f64,
    pub rng: &'r mut Rng,
}

fn drop(g: &mut Graph<'_>, v: Var, d: &mut Option<Dropout<'_>>) -> Result<Var> {
    match d {
        Some(d) => g.dropout(v, d.rate, d.rng),
        None => Ok(v),
    }
}

struct EncodedVars {
    rows: Vec<Var>,
    keys: Vec<Var>,
    init: Var,
}

struct StemStep {
    attention: Var,
    context: Var,
    state: Var,
    output: Var,
    dist: Var,
}

pub(crate) struct BatchLoss {
    pub total: Var,
    pub stem: Var,
    pub suffix: Var,
    pub tokens: usize,
}

#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    params: ParamStore,
    ids: Ids,
}

impl Model {
    /// Fresh model with every weight drawn from `uniform(-0.08, 0.08)`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        Self::with_init_scale(config, seed, DEFAULT_INIT_SCALE)
    }

    pub fn with_init_scale(config: ModelConfig, seed: u64, scale: f64) -> Result<Self> {
        config.validate()?;
        let (e, h) = (config.embed_dim, config.hidden_dim);
        let mut rng = Rng::with_stream(seed, INIT_STREAM);
        let mut store = ParamStore::new();
        let add = |store: &mut ParamStore, rng: &mut Rng, name: &str, shape: &[usize]| {
            store.insert(name, Tensor::from_fn(shape, |_| rng.uniform(-scale, scale)))
        };
        add(&mut store, &mut rng, "src_embed", &[config.src_vocab, e])?;
        GruWeights::random(e, h, scale, &mut rng).register(&mut store, "encoder.forward")?;
        GruWeights::random(e, h, scale, &mut rng).register(&mut store, "encoder.backward")?;
        add(&mut store, &mut rng, "decoder.init.w", &[h, 2 * h])?;
        add(&mut store, &mut rng, "decoder.init.b", &[h])?;
        add(&mut store, &mut rng, "attention.query", &[h, h])?;
        add(&mut store, &mut rng, "attention.key", &[h, 2 * h])?;
        add(&mut store, &mut rng, "attention.bias", &[h])?;
        add(&mut store, &mut rng, "attention.score", &[1, h])?;
        add(&mut store, &mut rng, "stem_embed", &[config.stem_vocab, e])?;
        GruWeights::random(e + 2 * h, h, scale, &mut rng).register(&mut store, "decoder.gru")?;
        add(&mut store, &mut rng, "stem_output.w", &[h, e + h + 2 * h])?;
        add(&mut store, &mut rng, "stem_output.b", &[h])?;
        add(&mut store, &mut rng, "stem_head.w", &[config.stem_vocab, h])?;
        add(&mut store, &mut rng, "stem_head.b", &[config.stem_vocab])?;
        add(&mut store, &mut rng, "suffix_hidden.w", &[h, h + e + 2 * h])?;
        add(&mut store, &mut rng, "suffix_hidden.b", &[h])?;
        add(&mut store, &mut rng, "suffix_head.w", &[config.suffix_vocab, h])?;
        add(&mut store, &mut rng, "suffix_head.b", &[config.suffix_vocab])?;
        Self::from_params(config, store)
    }

    /// Wraps existing parameters, checking every expected name and shape.
    pub fn from_params(config: ModelConfig, params: ParamStore) -> Result<Self> {
        config.validate()?;
        let (e, h) = (config.embed_dim, config.hidden_dim);
        let expect = |name: &str, shape: &[usize]| -> Result<ParamId> {
            let id = params.id(name)?;
            let actual = params.get(id).shape();
            if actual != shape {
                return Err(Error::ShapeMismatch {
                    name: name.to_string(),
                    expected: shape.to_vec(),
                    actual: actual.to_vec(),
                });
            }
            Ok(id)
        };
        let gru = |prefix: &str, input: usize| -> Result<GruParams> {
            for w in ["w_update", "w_reset", "w_candidate"] {
                expect(&format!("{prefix}.{w}"), &[h, h + input])?;
            }
            for b in ["b_update", "b_reset", "b_candidate"] {
                expect(&format!("{prefix}.{b}"), &[h])?;
            }
            GruParams::lookup(&params, prefix)
        };
        let ids = Ids {
            src_embed: expect("src_embed", &[config.src_vocab, e])?,
            enc_fwd: gru("encoder.forward", e)?,
            enc_bwd: gru("encoder.backward", e)?,
            init_w: expect("decoder.init.w", &[h, 2 * h])?,
            init_b: expect("decoder.init.b", &[h])?,
            att_query: expect("attention.query", &[h, h])?,
            att_key: expect("attention.key", &[h, 2 * h])?,
            att_bias: expect("attention.bias", &[h])?,
            att_score: expect("attention.score", &[1, h])?,
            stem_embed: expect("stem_embed", &[config.stem_vocab, e])?,
            dec: gru("decoder.gru", e + 2 * h)?,
            out_w: expect("stem_output.w", &[h, e + h + 2 * h])?,
            out_b: expect("stem_output.b", &[h])?,
            stem_w: expect("stem_head.w", &[config.stem_vocab, h])?,
            stem_b: expect("stem_head.b", &[config.stem_vocab])?,
            sfx_hidden_w: expect("suffix_hidden.w", &[h, h + e + 2 * h])?,
            sfx_hidden_b: expect("suffix_hidden.b", &[h])?,
            sfx_w: expect("suffix_head.w", &[config.suffix_vocab, h])?,
            sfx_b: expect("suffix_head.b", &[config.suffix_vocab])?,
        };
        Ok(Model { config, params, ids })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Mutable access to the weights. Shapes must be preserved.
    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn into_params(self) -> ParamStore {
        self.params
    }

    fn encode_graph(&self, g: &mut Graph<'_>, src: &[usize], d: &mut Option<Dropout<'_>>) -> Result<EncodedVars> {
        if src.is_empty() {
            return Err(Error::EmptySource);
        }
        let ids = &self.ids;
        let h = self.config.hidden_dim;
        let mut embs = Vec::with_capacity(src.len());
        for &w in src {
            let e = g.row(ids.src_embed, w)?;
            embs.push(drop(g, e, d)?);
        }
        let zero = g.input(vec![0.0; h]);
        let mut fwd = Vec::with_capacity(src.len());
        let mut state = zero;
        for &e in &embs {
            state = ids.enc_fwd.step(g, e, state)?;
            fwd.push(state);
        }
        let mut bwd = Vec::with_capacity(src.len());
        state = zero;
        for &e in embs.iter().rev() {
            state = ids.enc_bwd.step(g, e, state)?;
            bwd.push(state);
        }
        bwd.reverse();
        let rows: Vec<Var> = fwd.iter().zip(&bwd).map(|(&f, &b)| g.concat(&[f, b])).collect();
        let mut keys = Vec::with_capacity(rows.len());
        for &r in &rows {
            keys.push(g.affine(ids.att_key, Some(ids.att_bias), r)?);
        }
        let mean = g.mean(&rows)?;
        let pre = g.affine(ids.init_w, Some(ids.init_b), mean)?;
        let init = g.tanh(pre);
        Ok(EncodedVars { rows, keys, init })
    }

    fn attend_graph(&self, g: &mut Graph<'_>, s_prev: Var, enc: &EncodedVars) -> Result<(Var, Var)> {
        let q = g.affine(self.ids.att_query, None, s_prev)?;
        let mut scores = Vec::with_capacity(enc.keys.len());
        for &k in &enc.keys {
            let sum = g.add(q, k)?;
            let act = g.tanh(sum);
            scores.push(g.affine(self.ids.att_score, None, act)?);
        }
        let e = g.concat(&scores);
        let alpha = g.softmax(e)?;
        let ctx = g.weighted_sum(alpha, &enc.rows)?;
        Ok((alpha, ctx))
    }

    fn stem_step_graph(
        &self,
        g: &mut Graph<'_>,
        y_prev: usize,
        s_prev: Var,
        enc: &EncodedVars,
        d: &mut Option<Dropout<'_>>,
    ) -> Result<StemStep> {
        let ids = &self.ids;
        let (attention, context) = self.attend_graph(g, s_prev, enc)?;
        let emb = g.row(ids.stem_embed, y_prev)?;
        let emb = drop(g, emb, d)?;
        let x = g.concat(&[emb, context]);
        let state = ids.dec.step(g, x, s_prev)?;
        let o_in = g.concat(&[emb, state, context]);
        let o_pre = g.affine(ids.out_w, Some(ids.out_b), o_in)?;
        let output = g.tanh(o_pre);
        let o = drop(g, output, d)?;
        let logits = g.affine(ids.stem_w, Some(ids.stem_b), o)?;
        let dist = g.softmax(logits)?;
        Ok(StemStep {
            attention,
            context,
            state,
            output,
            dist,
        })
    }

    fn suffix_graph(
        &self,
        g: &mut Graph<'_>,
        state: Var,
        y_stem: usize,
        context: Var,
        d: &mut Option<Dropout<'_>>,
    ) -> Result<(Var, Var)> {
        let ids = &self.ids;
        let emb = g.row(ids.stem_embed, y_stem)?;
        let emb = drop(g, emb, d)?;
        let x = g.concat(&[state, emb, context]);
        let pre = g.affine(ids.sfx_hidden_w, Some(ids.sfx_hidden_b), x)?;
        let hidden = g.tanh(pre);
        let hidden_d = drop(g, hidden, d)?;
        let logits = g.affine(ids.sfx_w, Some(ids.sfx_b), hidden_d)?;
        let dist = g.softmax(logits)?;
        Ok((hidden, dist))
    }

    /// Summed stem and suffix NLL of one teacher-forced sentence, `</s>` included.
    fn sentence_loss_graph(
        &self,
        g: &mut Graph<'_>,
        src: &[usize],
        substems: &[usize],
        suffixes: &[usize],
        d: &mut Option<Dropout<'_>>,
    ) -> Result<(Var, Var, usize)> {
        if substems.len() != suffixes.len() {
            return Err(Error::LengthMismatch(format!(
                "{} stems but {} suffixes",
                substems.len(),
                suffixes.len()
            )));
        }
        let enc = self.encode_graph(g, src, d)?;
        let n = substems.len();
        let mut stem_nll = Vec::with_capacity(n + 1);
        let mut suffix_nll = Vec::with_capacity(n + 1);
        let mut s = enc.init;
        let mut y_prev = BOS;
        for t in 0..=n {
            let (gold_stem, gold_suffix) = if t < n {
                (substems[t], suffixes[t])
            } else {
                (EOS, NO_SUFFIX_ID)
            };
            let step = self.stem_step_graph(g, y_prev, s, &enc, d)?;
            stem_nll.push(g.nll(step.dist, gold_stem)?);
            let (_, sd) = self.suffix_graph(g, step.state, gold_stem, step.context, d)?;
            suffix_nll.push(g.nll(sd, gold_suffix)?);
            s = step.state;
            y_prev = gold_stem;
        }
        let stem = g.sum(&stem_nll)?;
        let suffix = g.sum(&suffix_nll)?;
        Ok((stem, suffix, n + 1))
    }

    pub(crate) fn batch_loss_graph(
        &self,
        g: &mut Graph<'_>,
        pairs: &[&TrainingPair],
        lambda: f64,
        d: &mut Option<Dropout<'_>>,
    ) -> Result<BatchLoss> {
        if pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut stems = Vec::with_capacity(pairs.len());
        let mut suffixes = Vec::with_capacity(pairs.len());
        let mut tokens = 0;
        for p in pairs {
            let (s, f, n) =
                self.sentence_loss_graph(g, &p.src, p.target.substems(), p.target.suffixes(), d)?;
            stems.push(s);
            suffixes.push(f);
            tokens += n;
        }
        let inv = 1.0 / tokens as f64;
        let stem_sum = g.sum(&stems)?;
        let suffix_sum = g.sum(&suffixes)?;
        let stem = g.scale(stem_sum, inv);
        let suffix = g.scale(suffix_sum, inv);
        let a = g.scale(stem, 1.0 - lambda);
        let b = g.scale(suffix, lambda);
        let total = g.add(a, b)?;
        Ok(BatchLoss {
            total,
            stem,
            suffix,
            tokens,
        })
    }

    /// Records the dropout-free batch loss `L` on `g`.
    ///
    /// `g` may run over any store with this model's parameter layout, such
    /// as a perturbed copy of [`Model::params`].
    pub fn loss_graph(&self, g: &mut Graph<'_>, pairs: &[&TrainingPair], lambda: f64) -> Result<Var> {
        Ok(self.batch_loss_graph(g, pairs, lambda, &mut None)?.total)
    }

    /// Central-difference check of the analytic gradient of `L` over every weight.
    pub fn gradient_check(&self, pairs: &[&TrainingPair], lambda: f64, h: f64) -> Result<GradCheckReport> {
        self.gradient_check_with(pairs, lambda, h, Stencil::Central)
    }

    pub fn gradient_check_with(
        &self,
        pairs: &[&TrainingPair],
        lambda: f64,
        h: f64,
        stencil: Stencil,
    ) -> Result<GradCheckReport> {
        let mut store = self.params.clone();
        finite_diff_check_with(&mut store, h, stencil, |g| self.loss_graph(g, pairs, lambda))
    }

    /// Teacher-forced loss of one sentence pair, without dropout.
    pub fn forward_loss(
        &self,
        src: &[usize],
        substems: &[usize],
        suffixes: &[usize],
        lambda: f64,
    ) -> Result<LossBreakdown> {
        let pair = TrainingPair::new(src.to_vec(), substems.to_vec(), suffixes.to_vec())?;
        let mut g = Graph::new(&self.params);
        let l = self.batch_loss_graph(&mut g, &[&pair], lambda, &mut None)?;
        Ok(LossBreakdown {
            total: g.scalar(l.total),
            stem: g.scalar(l.stem),
            suffix: g.scalar(l.suffix),
        })
    }

    /// Batch loss and parameter gradients. Dropout applies when `rng` is given.
    pub fn loss_and_gradients(
        &self,
        pairs: &[&TrainingPair],
        lambda: f64,
        rng: Option<&mut Rng>,
    ) -> Result<(LossBreakdown, Gradients, usize)> {
        let mut d = rng.map(|rng| Dropout {
            rate: self.config.dropout_rate,
            rng,
        });
        let mut g = Graph::new(&self.params);
        let l = self.batch_loss_graph(&mut g, pairs, lambda, &mut d)?;
        let breakdown = LossBreakdown {
            total: g.scalar(l.total),
            stem: g.scalar(l.stem),
            suffix: g.scalar(l.suffix),
        };
        let grads = g.backward(l.total)?;
        Ok((breakdown, grads, l.tokens))
    }

    /// Runs the encoder over `src`.
    pub fn encode(&self, src: &[usize]) -> Result<EncoderState> {
        let mut g = Graph::new(&self.params);
        let enc = self.encode_graph(&mut g, src, &mut None)?;
        let h2 = 2 * self.config.hidden_dim;
        let h = self.config.hidden_dim;
        let mut states = Vec::with_capacity(src.len() * h2);
        let mut keys = Vec::with_capacity(src.len() * h);
        for (&r, &k) in enc.rows.iter().zip(&enc.keys) {
            states.extend_from_slice(g.value(r));
            keys.extend_from_slice(g.value(k));
        }
        Ok(EncoderState {
            states: Tensor::new(vec![src.len(), h2], states)?,
            keys: Tensor::new(vec![src.len(), h], keys)?,
            init: g.value(enc.init).to_vec(),
        })
    }

    fn load_encoded(&self, g: &mut Graph<'_>, enc: &EncoderState) -> Result<EncodedVars> {
        if enc.is_empty() {
            return Err(Error::EmptySource);
        }
        if enc.states.cols() != 2 * self.config.hidden_dim {
            return Err(Error::ShapeMismatch {
                name: "encoder states".into(),
                expected: vec![enc.len(), 2 * self.config.hidden_dim],
                actual: enc.states.shape().to_vec(),
            });
        }
        let rows = (0..enc.len()).map(|i| g.input(enc.states.row(i).to_vec())).collect();
        let keys = (0..enc.len()).map(|i| g.input(enc.keys.row(i).to_vec())).collect();
        let init = g.input(enc.init.clone());
        Ok(EncodedVars { rows, keys, init })
    }

    fn check_state(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.config.hidden_dim {
            return Err(Error::ShapeMismatch {
                name: "decoder state".into(),
                expected: vec![self.config.hidden_dim],
                actual: vec![s.len()],
            });
        }
        Ok(())
    }

    /// Attention weights and context for the query `s_prev`.
    pub fn attend(&self, s_prev: &[f64], enc: &EncoderState) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_state(s_prev)?;
        let mut g = Graph::new(&self.params);
        let vars = self.load_encoded(&mut g, enc)?;
        let s = g.input(s_prev.to_vec());
        let (alpha, ctx) = self.attend_graph(&mut g, s, &vars)?;
        Ok((g.value(alpha).to_vec(), g.value(ctx).to_vec()))
    }

    /// Stem distribution at `step` given the previous stem and decoder state.
    pub fn decode_step_stem(
        &self,
        y_prev: usize,
        s_prev: &[f64],
        enc: &EncoderState,
        step: usize,
    ) -> Result<(Tensor, DecoderStepState)> {
        self.check_state(s_prev)?;
        let mut g = Graph::new(&self.params);
        let vars = self.load_encoded(&mut g, enc)?;
        let s = g.input(s_prev.to_vec());
        let out = self.stem_step_graph(&mut g, y_prev, s, &vars, &mut None)?;
        let dist = Tensor::vector(g.value(out.dist).to_vec());
        let state = DecoderStepState {
            step,
            prev_stem: y_prev,
            state: g.value(out.state).to_vec(),
            context: g.value(out.context).to_vec(),
            attention: g.value(out.attention).to_vec(),
            stem_output: g.value(out.output).to_vec(),
        };
        Ok((dist, state))
    }

    /// Suffix distribution for stem `y_stem` chosen at `step`.
    ///
    /// `state` must come from [`Model::decode_step_stem`] at the same step.
    pub fn decode_step_suffix(
        &self,
        state: &DecoderStepState,
        y_stem: usize,
        step: usize,
    ) -> Result<SuffixPrediction> {
        if state.step != step {
            return Err(Error::StaleState {
                state_step: state.step,
                step,
            });
        }
        let mut g = Graph::new(&self.params);
        let s = g.input(state.state.clone());
        let c = g.input(state.context.clone());
        let (hidden, dist) = self.suffix_graph(&mut g, s, y_stem, c, &mut None)?;
        Ok(SuffixPrediction {
            dist: Tensor::vector(g.value(dist).to_vec()),
            suffix_state: g.value(hidden).to_vec(),
            context: g.value(c).to_vec(),
        })
    }
}
