//! Tape-based reverse-mode differentiation over vector-valued nodes.
//!
//! A [`Graph`] borrows a [`ParamStore`] and records every operation as a
//! node holding its forward value. [`Graph::backward`] walks the tape in
//! reverse and returns [`Gradients`] for every parameter reached from the
//! loss. Weight matrices are read straight from the store; they are never
//! copied into the tape.

use super::ops::{sigmoid, softmax_slice, NLL_EPSILON};
use super::params::{ParamId, ParamStore};
use super::rng::Rng;
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    Row { param: ParamId, row: usize },
    Affine { w: ParamId, b: Option<ParamId>, x: Var },
    Add(Var, Var),
    Mul(Var, Var),
    OneMinus(Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Vec<Var>),
    Mask(Var, Vec<f64>),
    Scale(Var, f64),
    SumElements(Var),
    Sum(Vec<Var>),
    Mean(Vec<Var>),
    Softmax(Var),
    Nll { dist: Var, gold: usize },
    WeightedSum { weights: Var, rows: Vec<Var> },
}

impl Op {
    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Input | Op::Param(_) | Op::Row { .. } => vec![],
            Op::Affine { x, .. } => vec![*x],
            Op::Add(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::OneMinus(a)
            | Op::Sigmoid(a)
            | Op::Tanh(a)
            | Op::Mask(a, _)
            | Op::Scale(a, _)
            | Op::SumElements(a)
            | Op::Softmax(a) => vec![*a],
            Op::Nll { dist, .. } => vec![*dist],
            Op::Concat(xs) | Op::Sum(xs) | Op::Mean(xs) => xs.clone(),
            Op::WeightedSum { weights, rows } => {
                let mut v = rows.clone();
                v.push(*weights);
                v
            }
        }
    }
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

/// Per-parameter gradients produced by one backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    fn new(num_params: usize) -> Self {
        Gradients {
            grads: vec![None; num_params],
        }
    }

    fn slot(&mut self, id: ParamId, len: usize) -> &mut [f64] {
        self.grads[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    /// Gradient of `id`, or `None` if the loss does not reach it.
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    /// Gradient of `id`, with unreached parameters reported as zeros.
    pub fn dense(&self, id: ParamId, len: usize) -> Vec<f64> {
        self.get(id).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; len])
    }

    /// Adds these gradients into the store's gradient buffers.
    ///
    /// Every parameter ends up with an allocated buffer, zero if unreached.
    pub fn accumulate_into(&self, store: &mut ParamStore) {
        let ids: Vec<ParamId> = store.ids().collect();
        for id in ids {
            let t = store.get_mut(id);
            match self.get(id) {
                Some(g) => t.accumulate_grad(g),
                None => {
                    if t.grad().is_none() {
                        t.zero_grad();
                    }
                }
            }
        }
    }
}

/// A recorded forward computation.
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    consumed: bool,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph {
            params,
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    /// Scalar value of a one-element node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        if cfg!(debug_assertions) {
            let inputs_finite = op
                .inputs()
                .iter()
                .all(|i| self.nodes[i.0].value.iter().all(|x| x.is_finite()));
            if inputs_finite && !matches!(op, Op::Affine { .. }) {
                debug_assert!(
                    value.iter().all(|x| x.is_finite()),
                    "non-finite output from {op:?}"
                );
            }
        }
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// A constant leaf; receives no gradient outside the graph.
    pub fn input(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Input)
    }

    /// The whole parameter as a flat vector (biases, small tensors).
    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.params.get(id).data().to_vec();
        self.push(value, Op::Param(id))
    }

    /// One row of a matrix parameter (embedding lookup).
    pub fn row(&mut self, id: ParamId, row: usize) -> Result<Var> {
        let t = self.params.get(id);
        if row >= t.rows() {
            return Err(Error::IndexOutOfRange {
                index: row,
                size: t.rows(),
            });
        }
        let value = t.row(row).to_vec();
        Ok(self.push(value, Op::Row { param: id, row }))
    }

    /// `W x + b` for a matrix parameter `W` of shape [out, in].
    pub fn affine(&mut self, w: ParamId, b: Option<ParamId>, x: Var) -> Result<Var> {
        let wt = self.params.get(w);
        let (rows, cols) = (wt.rows(), wt.cols());
        let xv = &self.nodes[x.0].value;
        if wt.rank() != 2 || cols != xv.len() {
            return Err(Error::ShapeMismatch {
                name: self.params.name(w).to_string(),
                expected: vec![rows, xv.len()],
                actual: wt.shape().to_vec(),
            });
        }
        let mut out = match b {
            Some(b) => {
                let bt = self.params.get(b);
                if bt.len() != rows {
                    return Err(Error::ShapeMismatch {
                        name: self.params.name(b).to_string(),
                        expected: vec![rows],
                        actual: bt.shape().to_vec(),
                    });
                }
                bt.data().to_vec()
            }
            None => vec![0.0; rows],
        };
        let wd = wt.data();
        for (i, o) in out.iter_mut().enumerate() {
            let wrow = &wd[i * cols..(i + 1) * cols];
            let mut acc = 0.0;
            for (a, b) in wrow.iter().zip(xv) {
                acc += a * b;
            }
            *o += acc;
        }
        Ok(self.push(out, Op::Affine { w, b, x }))
    }

    fn same_len(&self, a: Var, b: Var, what: &str) -> Result<()> {
        let (la, lb) = (self.nodes[a.0].value.len(), self.nodes[b.0].value.len());
        if la != lb {
            return Err(Error::ShapeMismatch {
                name: what.to_string(),
                expected: vec![la],
                actual: vec![lb],
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "add")?;
        let v = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len(a, b, "mul")?;
        let v = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(v, Op::Mul(a, b)))
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.iter().map(|x| 1.0 - x).collect();
        self.push(v, Op::OneMinus(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.iter().map(|&x| sigmoid(x)).collect();
        self.push(v, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.nodes[a.0].value.iter().map(|x| x.tanh()).collect();
        self.push(v, Op::Tanh(a))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut v = Vec::new();
        for p in parts {
            v.extend_from_slice(&self.nodes[p.0].value);
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.nodes[a.0].value.iter().map(|x| x * c).collect();
        self.push(v, Op::Scale(a, c))
    }

    /// Sum of all elements as a one-element node.
    pub fn sum_elements(&mut self, a: Var) -> Var {
        let v = vec![self.nodes[a.0].value.iter().sum()];
        self.push(v, Op::SumElements(a))
    }

    /// Elementwise sum of equally sized nodes.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("sum of nothing".into()))?;
        let mut v = self.nodes[first.0].value.clone();
        for p in &parts[1..] {
            self.same_len(first, *p, "sum")?;
            for (a, b) in v.iter_mut().zip(&self.nodes[p.0].value) {
                *a += b;
            }
        }
        Ok(self.push(v, Op::Sum(parts.to_vec())))
    }

    /// Elementwise mean of equally sized nodes.
    pub fn mean(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("mean of nothing".into()))?;
        let mut v = self.nodes[first.0].value.clone();
        for p in &parts[1..] {
            self.same_len(first, *p, "mean")?;
            for (a, b) in v.iter_mut().zip(&self.nodes[p.0].value) {
                *a += b;
            }
        }
        let k = parts.len() as f64;
        v.iter_mut().for_each(|a| *a /= k);
        Ok(self.push(v, Op::Mean(parts.to_vec())))
    }

    /// Inverted dropout: zero with probability `rate`, scale survivors by 1/(1-rate).
    pub fn dropout(&mut self, a: Var, rate: f64, rng: &mut Rng) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {rate} not in [0, 1)"
            )));
        }
        if rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.nodes[a.0].value.len())
            .map(|_| if rng.bernoulli(rate) { 0.0 } else { keep })
            .collect();
        let v = self.nodes[a.0]
            .value
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        Ok(self.push(v, Op::Mask(a, mask)))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        let v = softmax_slice(&self.nodes[a.0].value)?;
        Ok(self.push(v, Op::Softmax(a)))
    }

    /// `-ln(dist[gold] + eps)` as a one-element node.
    pub fn nll(&mut self, dist: Var, gold: usize) -> Result<Var> {
        let d = &self.nodes[dist.0].value;
        if gold >= d.len() {
            return Err(Error::IndexOutOfRange {
                index: gold,
                size: d.len(),
            });
        }
        let v = vec![-(d[gold] + NLL_EPSILON).ln()];
        Ok(self.push(v, Op::Nll { dist, gold }))
    }

    /// `sum_j weights[j] * rows[j]`.
    pub fn weighted_sum(&mut self, weights: Var, rows: &[Var]) -> Result<Var> {
        let w = &self.nodes[weights.0].value;
        if w.len() != rows.len() || rows.is_empty() {
            return Err(Error::ShapeMismatch {
                name: "attention weights".into(),
                expected: vec![rows.len()],
                actual: vec![w.len()],
            });
        }
        let dim = self.nodes[rows[0].0].value.len();
        let mut out = vec![0.0; dim];
        for (j, r) in rows.iter().enumerate() {
            let rv = &self.nodes[r.0].value;
            if rv.len() != dim {
                return Err(Error::ShapeMismatch {
                    name: "attended rows".into(),
                    expected: vec![dim],
                    actual: vec![rv.len()],
                });
            }
            for (o, x) in out.iter_mut().zip(rv) {
                *o += w[j] * x;
            }
        }
        Ok(self.push(
            out,
            Op::WeightedSum {
                weights,
                rows: rows.to_vec(),
            },
        ))
    }

    /// Reverse-mode pass from a one-element `loss`.
    ///
    /// The tape is released afterwards; a second call fails with
    /// [`Error::GraphConsumed`].
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::GraphConsumed);
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::ShapeMismatch {
                name: "loss".into(),
                expected: vec![1],
                actual: vec![self.nodes[loss.0].value.len()],
            });
        }
        let params = self.params;
        let mut out = Gradients::new(params.len());
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => {
                    add_into(out.slot(*id, g.len()), &g);
                }
                Op::Row { param, row } => {
                    let t = params.get(*param);
                    let cols = t.cols();
                    let slot = out.slot(*param, t.len());
                    add_into(&mut slot[row * cols..(row + 1) * cols], &g);
                }
                Op::Affine { w, b, x } => {
                    let wt = params.get(*w);
                    let cols = wt.cols();
                    let xv = &self.nodes[x.0].value;
                    {
                        let gw = out.slot(*w, wt.len());
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            let dst = &mut gw[r * cols..(r + 1) * cols];
                            for (d, xv) in dst.iter_mut().zip(xv) {
                                *d += gr * xv;
                            }
                        }
                    }
                    if let Some(b) = b {
                        add_into(out.slot(*b, g.len()), &g);
                    }
                    let gx = grad_slot(&mut grads, *x, cols);
                    let wd = wt.data();
                    for (r, gr) in g.iter().enumerate() {
                        if *gr == 0.0 {
                            continue;
                        }
                        let wrow = &wd[r * cols..(r + 1) * cols];
                        for (d, w) in gx.iter_mut().zip(wrow) {
                            *d += gr * w;
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(grad_slot(&mut grads, *a, g.len()), &g);
                    add_into(grad_slot(&mut grads, *b, g.len()), &g);
                }
                Op::Mul(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let ga: Vec<f64> = g.iter().zip(bv).map(|(g, b)| g * b).collect();
                    let gb: Vec<f64> = g.iter().zip(av).map(|(g, a)| g * a).collect();
                    add_into(grad_slot(&mut grads, *a, g.len()), &ga);
                    add_into(grad_slot(&mut grads, *b, g.len()), &gb);
                }
                Op::OneMinus(a) => {
                    let dst = grad_slot(&mut grads, *a, g.len());
                    for (d, g) in dst.iter_mut().zip(&g) {
                        *d -= g;
                    }
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let dst = grad_slot(&mut grads, *a, g.len());
                    for ((d, g), y) in dst.iter_mut().zip(&g).zip(y) {
                        *d += g * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let dst = grad_slot(&mut grads, *a, g.len());
                    for ((d, g), y) in dst.iter_mut().zip(&g).zip(y) {
                        *d += g * (1.0 - y * y);
                    }
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        add_into(grad_slot(&mut grads, *p, n), &g[off..off + n]);
                        off += n;
                    }
                }
                Op::Mask(a, mask) => {
                    let dst = grad_slot(&mut grads, *a, g.len());
                    for ((d, g), m) in dst.iter_mut().zip(&g).zip(mask) {
                        *d += g * m;
                    }
                }
                Op::Scale(a, c) => {
                    let dst = grad_slot(&mut grads, *a, g.len());
                    for (d, g) in dst.iter_mut().zip(&g) {
                        *d += g * c;
                    }
                }
                Op::SumElements(a) => {
                    let n = self.nodes[a.0].value.len();
                    let dst = grad_slot(&mut grads, *a, n);
                    dst.iter_mut().for_each(|d| *d += g[0]);
                }
                Op::Sum(parts) => {
                    for p in parts {
                        add_into(grad_slot(&mut grads, *p, g.len()), &g);
                    }
                }
                Op::Mean(parts) => {
                    let k = parts.len() as f64;
                    let scaled: Vec<f64> = g.iter().map(|x| x / k).collect();
                    for p in parts {
                        add_into(grad_slot(&mut grads, *p, g.len()), &scaled);
                    }
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let dot: f64 = g.iter().zip(y).map(|(g, y)| g * y).sum();
                    let dst = grad_slot(&mut grads, *a, g.len());
                    for ((d, g), y) in dst.iter_mut().zip(&g).zip(y) {
                        *d += y * (g - dot);
                    }
                }
                Op::Nll { dist, gold } => {
                    let p = self.nodes[dist.0].value[*gold];
                    let n = self.nodes[dist.0].value.len();
                    let dst = grad_slot(&mut grads, *dist, n);
                    dst[*gold] += -g[0] / (p + NLL_EPSILON);
                }
                Op::WeightedSum { weights, rows } => {
                    let w = self.nodes[weights.0].value.clone();
                    let mut gw = vec![0.0; rows.len()];
                    for (j, r) in rows.iter().enumerate() {
                        let rv = &self.nodes[r.0].value;
                        gw[j] = g.iter().zip(rv).map(|(g, x)| g * x).sum();
                        let scaled: Vec<f64> = g.iter().map(|g| g * w[j]).collect();
                        add_into(grad_slot(&mut grads, *r, g.len()), &scaled);
                    }
                    add_into(grad_slot(&mut grads, *weights, rows.len()), &gw);
                }
            }
        }

        self.nodes.clear();
        self.consumed = true;
        Ok(out)
    }
}

fn grad_slot(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
