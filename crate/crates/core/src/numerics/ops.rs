use super::rng::Rng;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Added inside the logarithm of the negative log-likelihood.
pub const NLL_EPSILON: f64 = 1e-12;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn softmax_slice(logits: &[f64]) -> Result<Vec<f64>> {
    if logits.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// Numerically stable softmax over a vector.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    Ok(Tensor::vector(softmax_slice(logits.data())?))
}

pub fn log_softmax(logits: &Tensor) -> Result<Tensor> {
    let xs = logits.data();
    if xs.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    Ok(Tensor::vector(xs.iter().map(|x| x - lse).collect()))
}

/// `-ln(dist[gold] + 1e-12)`.
pub fn cross_entropy(dist: &Tensor, gold: usize) -> Result<f64> {
    let d = dist.data();
    if gold >= d.len() {
        return Err(Error::IndexOutOfRange {
            index: gold,
            size: d.len(),
        });
    }
    Ok(-(d[gold] + NLL_EPSILON).ln())
}

/// Inverted dropout on a plain tensor; identity at inference.
pub fn dropout(x: &Tensor, rate: f64, rng: &mut Rng, training: bool) -> Result<Tensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate {rate} not in [0, 1)"
        )));
    }
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let keep = 1.0 / (1.0 - rate);
    let data = x
        .data()
        .iter()
        .map(|v| if rng.bernoulli(rate) { 0.0 } else { v * keep })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}
