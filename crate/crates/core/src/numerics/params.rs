use indexmap::IndexMap;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable tensors, iterated in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    tensors: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) -> Result<ParamId> {
        if self.tensors.contains_key(name) {
            return Err(Error::InvalidArgument(format!(
                "duplicate parameter name {name}"
            )));
        }
        let (idx, _) = self.tensors.insert_full(name.to_string(), tensor);
        Ok(ParamId(idx))
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.tensors
            .get_index_of(name)
            .map(ParamId)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn by_name_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    pub fn name(&self, id: ParamId) -> &str {
        self.tensors.get_index(id.0).map(|(k, _)| k.as_str()).unwrap_or("?")
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn zero_grads(&mut self) {
        self.tensors.values_mut().for_each(Tensor::zero_grad);
    }

    pub fn clear_grads(&mut self) {
        self.tensors.values_mut().for_each(Tensor::clear_grad);
    }

    /// True when both stores hold the same names, shapes and bit-identical values.
    pub fn bit_identical(&self, other: &ParamStore) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(other.tensors.iter())
                .all(|((na, a), (nb, b))| {
                    na == nb
                        && a.shape() == b.shape()
                        && a.data()
                            .iter()
                            .zip(b.data())
                            .all(|(x, y)| x.to_bits() == y.to_bits())
                })
    }

    /// Uniform average of several stores with identical layout.
    ///
    /// The sum starts from the first store's values so that averaging a
    /// single store reproduces it bit for bit.
    pub fn average(stores: &[&ParamStore]) -> Result<ParamStore> {
        let first = stores
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to average".into()))?;
        let mut out = ParamStore::new();
        for (idx, (name, tensor)) in first.tensors.iter().enumerate() {
            let mut acc = tensor.data().to_vec();
            for other in &stores[1..] {
                let (other_name, t) = other
                    .tensors
                    .get_index(idx)
                    .ok_or_else(|| Error::UnknownParameter(name.clone()))?;
                if other_name != name || t.shape() != tensor.shape() {
                    return Err(Error::ShapeMismatch {
                        name: name.clone(),
                        expected: tensor.shape().to_vec(),
                        actual: t.shape().to_vec(),
                    });
                }
                for (a, b) in acc.iter_mut().zip(t.data()) {
                    *a += b;
                }
            }
            let k = stores.len() as f64;
            if stores.len() > 1 {
                acc.iter_mut().for_each(|a| *a /= k);
            }
            out.insert(name, Tensor::new(tensor.shape().to_vec(), acc)?)?;
        }
        Ok(out)
    }
}
