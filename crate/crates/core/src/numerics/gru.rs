use super::graph::{Graph, Var};
use super::params::{ParamId, ParamStore};
use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::Result;

/// Handles to the six tensors of one GRU cell.
///
/// Gate matrices act on `[h_prev ; x]`; the candidate matrix acts on
/// `[r * h_prev ; x]`.
#[derive(Debug, Clone, Copy)]
pub struct GruParams {
    pub w_update: ParamId,
    pub b_update: ParamId,
    pub w_reset: ParamId,
    pub b_reset: ParamId,
    pub w_candidate: ParamId,
    pub b_candidate: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

/// Plain tensors for a standalone GRU cell.
#[derive(Debug, Clone)]
pub struct GruWeights {
    pub w_update: Tensor,
    pub b_update: Tensor,
    pub w_reset: Tensor,
    pub b_reset: Tensor,
    pub w_candidate: Tensor,
    pub b_candidate: Tensor,
}

impl GruWeights {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let w = || Tensor::zeros(&[hidden_dim, hidden_dim + input_dim]);
        let b = || Tensor::zeros(&[hidden_dim]);
        GruWeights {
            w_update: w(),
            b_update: b(),
            w_reset: w(),
            b_reset: b(),
            w_candidate: w(),
            b_candidate: b(),
        }
    }

    pub fn random(input_dim: usize, hidden_dim: usize, scale: f64, rng: &mut Rng) -> Self {
        let mut w = || {
            Tensor::from_fn(&[hidden_dim, hidden_dim + input_dim], |_| {
                rng.uniform(-scale, scale)
            })
        };
        let (wz, wr, wh) = (w(), w(), w());
        let mut b = || Tensor::from_fn(&[hidden_dim], |_| rng.uniform(-scale, scale));
        let (bz, br, bh) = (b(), b(), b());
        GruWeights {
            w_update: wz,
            b_update: bz,
            w_reset: wr,
            b_reset: br,
            w_candidate: wh,
            b_candidate: bh,
        }
    }

    /// Registers the tensors in `store` under `prefix.*`.
    pub fn register(self, store: &mut ParamStore, prefix: &str) -> Result<GruParams> {
        let input_dim = self.w_update.cols() - self.w_update.rows();
        let hidden_dim = self.w_update.rows();
        Ok(GruParams {
            w_update: store.insert(&format!("{prefix}.w_update"), self.w_update)?,
            b_update: store.insert(&format!("{prefix}.b_update"), self.b_update)?,
            w_reset: store.insert(&format!("{prefix}.w_reset"), self.w_reset)?,
            b_reset: store.insert(&format!("{prefix}.b_reset"), self.b_reset)?,
            w_candidate: store.insert(&format!("{prefix}.w_candidate"), self.w_candidate)?,
            b_candidate: store.insert(&format!("{prefix}.b_candidate"), self.b_candidate)?,
            input_dim,
            hidden_dim,
        })
    }
}

impl GruParams {
    pub fn lookup(store: &ParamStore, prefix: &str) -> Result<Self> {
        let w_update = store.id(&format!("{prefix}.w_update"))?;
        let t = store.get(w_update);
        Ok(GruParams {
            w_update,
            b_update: store.id(&format!("{prefix}.b_update"))?,
            w_reset: store.id(&format!("{prefix}.w_reset"))?,
            b_reset: store.id(&format!("{prefix}.b_reset"))?,
            w_candidate: store.id(&format!("{prefix}.w_candidate"))?,
            b_candidate: store.id(&format!("{prefix}.b_candidate"))?,
            input_dim: t.cols() - t.rows(),
            hidden_dim: t.rows(),
        })
    }

    /// Records one GRU step on `g`:
    ///
    /// ```text
    /// z  = sigmoid(W_z [h; x] + b_z)
    /// r  = sigmoid(W_r [h; x] + b_r)
    /// h~ = tanh(W [r*h; x] + b)
    /// h' = (1 - z) * h + z * h~
    /// ```
    pub fn step(&self, g: &mut Graph<'_>, x: Var, h_prev: Var) -> Result<Var> {
        let hx = g.concat(&[h_prev, x]);
        let z_pre = g.affine(self.w_update, Some(self.b_update), hx)?;
        let z = g.sigmoid(z_pre);
        let r_pre = g.affine(self.w_reset, Some(self.b_reset), hx)?;
        let r = g.sigmoid(r_pre);
        let rh = g.mul(r, h_prev)?;
        let rhx = g.concat(&[rh, x]);
        let cand_pre = g.affine(self.w_candidate, Some(self.b_candidate), rhx)?;
        let cand = g.tanh(cand_pre);
        let keep = g.one_minus(z);
        let old = g.mul(keep, h_prev)?;
        let new = g.mul(z, cand)?;
        g.add(old, new)
    }

    /// One step outside any training graph.
    pub fn step_values(&self, store: &ParamStore, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        let mut g = Graph::new(store);
        let xv = g.input(x.to_vec());
        let hv = g.input(h_prev.to_vec());
        let out = self.step(&mut g, xv, hv)?;
        Ok(g.value(out).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(weights: GruWeights) -> (ParamStore, GruParams) {
        let mut store = ParamStore::new();
        let p = weights.register(&mut store, "gru").unwrap();
        (store, p)
    }

    #[test]
    fn zero_weights_halve_state() {
        let (store, p) = cell(GruWeights::zeros(3, 2));
        let h = p.step_values(&store, &[0.3, -1.0, 2.0], &[0.8, -0.4]).unwrap();
        assert_eq!(h, vec![0.4, -0.2]);
        let h = p.step_values(&store, &[0.3, -1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
    }

    #[test]
    fn closed_update_gate_copies_state() {
        let mut w = GruWeights::random(2, 3, 0.5, &mut Rng::new(3));
        w.w_update.data_mut().iter_mut().for_each(|x| *x = 0.0);
        w.b_update.data_mut().iter_mut().for_each(|x| *x = f64::NEG_INFINITY);
        let (store, p) = cell(w);
        let h_prev = [0.123456789, -0.987654321, 0.5];
        let h = p.step_values(&store, &[1.0, -2.0], &h_prev).unwrap();
        assert_eq!(h, h_prev.to_vec());
    }

    #[test]
    fn shape_mismatch_names_parameter() {
        let (store, p) = cell(GruWeights::zeros(3, 2));
        let err = p.step_values(&store, &[1.0], &[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("gru.w_update"), "{err}");
    }

    #[test]
    fn matches_scalar_evaluation() {
        // Independent scalar-by-scalar evaluation of the cell.
        let w = GruWeights::random(2, 2, 0.7, &mut Rng::new(9));
        let x = [0.4, -0.9];
        let h = [0.2, -0.6];
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut hx = h.to_vec();
        hx.extend_from_slice(&x);
        let lin = |m: &Tensor, b: &Tensor, v: &[f64], i: usize| -> f64 {
            b.data()[i] + m.row(i).iter().zip(v).map(|(w, x)| w * x).sum::<f64>()
        };
        let z: Vec<f64> = (0..2).map(|i| sig(lin(&w.w_update, &w.b_update, &hx, i))).collect();
        let r: Vec<f64> = (0..2).map(|i| sig(lin(&w.w_reset, &w.b_reset, &hx, i))).collect();
        let rhx = vec![r[0] * h[0], r[1] * h[1], x[0], x[1]];
        let cand: Vec<f64> = (0..2)
            .map(|i| lin(&w.w_candidate, &w.b_candidate, &rhx, i).tanh())
            .collect();
        let expect: Vec<f64> = (0..2).map(|i| (1.0 - z[i]) * h[i] + z[i] * cand[i]).collect();

        let (store, p) = cell(w);
        let got = p.step_values(&store, &x, &h).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }
}
