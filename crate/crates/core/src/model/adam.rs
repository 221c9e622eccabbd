use crate::error::{Error, Result};
use crate::numerics::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        AdamState {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update from the gradients held in `params`.
///
pub fn adam_update(params: &mut ParamStore, state: &mut AdamState) -> Result<()> {
    if params.len() != state.m.len() {
        return Err(Error::InvalidArgument(format!(
            "optimizer tracks {} parameters, store has {}",
            state.m.len(),
            params.len()
        )));
    }
    if let Some((name, _)) = params.iter().find(|(_, t)| t.grad().is_none()) {
        return Err(Error::MissingGradient(name.to_string()));
    }
    state.step += 1;
    let AdamConfig {
        learning_rate: lr,
        beta1: b1,
        beta2: b2,
        epsilon: eps,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (i, (name, tensor)) in params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        if m.len() != tensor.len() {
            return Err(Error::ShapeMismatch {
                name: name.to_string(),
                expected: vec![m.len()],
                actual: tensor.shape().to_vec(),
            });
        }
        let grad = tensor.grad().map(<[f64]>::to_vec).unwrap_or_default();
        let data = tensor.data_mut();
        for j in 0..data.len() {
            let g = grad[j];
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            data[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = ParamStore::new();
        let id = p.insert("w", Tensor::vector(vec![1.0, -2.0, 0.5])).unwrap();
        p.get_mut(id).accumulate_grad(&[3.0, -0.25, 0.0]);
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_update(&mut p, &mut s).unwrap();
        let d = p.get(id).data();
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        assert!((d[0] - (1.0 - 1e-3 * 3.0 / (3.0 + 1e-8))).abs() < 1e-15);
        assert!((d[1] - (-2.0 + 1e-3 * 0.25 / (0.25 + 1e-8))).abs() < 1e-15);
        assert_eq!(d[2], 0.5);
    }

    #[test]
    fn matches_hand_rolled_recursion() {
        let grads = [0.3, -1.2, 0.7, 0.01];
        let mut p = ParamStore::new();
        let id = p.insert("w", Tensor::vector(vec![0.2])).unwrap();
        let cfg = AdamConfig {
            learning_rate: 0.05,
            ..AdamConfig::default()
        };
        let mut s = AdamState::new(&p, cfg);
        let (mut w, mut m, mut v) = (0.2f64, 0.0f64, 0.0f64);
        for (t, &g) in grads.iter().enumerate() {
            p.get_mut(id).zero_grad();
            p.get_mut(id).accumulate_grad(&[g]);
            adam_update(&mut p, &mut s).unwrap();
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let k = (t + 1) as i32;
            w -= 0.05 * (m / (1.0 - 0.9f64.powi(k))) / ((v / (1.0 - 0.999f64.powi(k))).sqrt() + 1e-8);
            assert!((p.get(id).data()[0] - w).abs() < 1e-14);
        }
        assert_eq!(s.step(), 4);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = ParamStore::new();
        let id = p.insert("w", Tensor::vector(vec![0.25, -4.0])).unwrap();
        let mut s = AdamState::new(&p, AdamConfig::default());
        for _ in 0..3 {
            p.zero_grads();
            adam_update(&mut p, &mut s).unwrap();
        }
        assert_eq!(p.get(id).data(), &[0.25, -4.0]);
    }

    #[test]
    fn missing_gradient_is_named() {
        let mut p = ParamStore::new();
        p.insert("enc.w", Tensor::vector(vec![1.0])).unwrap();
        let mut s = AdamState::new(&p, AdamConfig::default());
        let err = adam_update(&mut p, &mut s).unwrap_err();
        assert!(err.to_string().contains("enc.w"));
    }

    #[test]
    fn rejects_foreign_store() {
        let mut p = ParamStore::new();
        p.insert("w", Tensor::vector(vec![0.0])).unwrap();
        p.zero_grads();
        let mut s = AdamState::new(&ParamStore::new(), AdamConfig::default());
        assert!(adam_update(&mut p, &mut s).is_err());
    }
}
