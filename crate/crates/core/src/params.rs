use std::collections::BTreeMap;

use crate::autodiff::{Array, Graph, Var};
use crate::error::{Error, Result};

/// Named parameter arrays of one network.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterStore {
    arrays: BTreeMap<String, Array>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array) -> Option<Array> {
        self.arrays.insert(name.into(), value)
    }

    pub fn get(&self, name: &str) -> Result<&Array> {
        self.arrays
            .get(name)
            .ok_or_else(|| Error::MissingParameter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Array> {
        self.arrays
            .get_mut(name)
            .ok_or_else(|| Error::MissingParameter(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array)> {
        self.arrays.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Array)> {
        self.arrays.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.arrays.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.arrays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrays.is_empty()
    }

    /// Total number of scalar values.
    pub fn num_values(&self) -> usize {
        self.arrays.values().map(Array::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            arrays: self
                .arrays
                .iter()
                .map(|(k, v)| (k.clone(), Array::zeros(v.shape())))
                .collect(),
        }
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.arrays.len() == other.arrays.len()
            && self
                .arrays
                .iter()
                .zip(&other.arrays)
                .all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
    }

    /// Euclidean norm over every value.
    pub fn norm(&self) -> f64 {
        self.arrays
            .values()
            .flat_map(|a| a.data())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Copy with every name prefixed by `prefix.`.
    pub fn prefixed(&self, prefix: &str) -> Self {
        Self {
            arrays: self
                .arrays
                .iter()
                .map(|(k, v)| (format!("{prefix}.{k}"), v.clone()))
                .collect(),
        }
    }

    /// Arrays whose names start with `prefix.`, with the prefix removed.
    pub fn extract(&self, prefix: &str) -> Self {
        let lead = format!("{prefix}.");
        Self {
            arrays: self
                .arrays
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(&lead).map(|n| (n.to_string(), v.clone())))
                .collect(),
        }
    }

    /// Moves every array of `other` into `self`, replacing equal names.
    pub fn merge(&mut self, other: Self) {
        self.arrays.extend(other.arrays);
    }

    /// Adds every array to `graph` as a leaf.
    pub fn bind(&self, graph: &mut Graph) -> BoundParams {
        BoundParams {
            vars: self
                .arrays
                .iter()
                .map(|(k, v)| (k.clone(), graph.leaf(v.clone())))
                .collect(),
        }
    }
}

/// Graph handles for the arrays of a [`ParameterStore`].
#[derive(Clone, Debug)]
pub struct BoundParams {
    vars: BTreeMap<String, Var>,
}

impl BoundParams {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingParameter(name.to_string()))
    }

    /// Collects the gradients computed by the last backward pass.
    pub fn gradients(&self, graph: &Graph) -> ParameterStore {
        let mut out = ParameterStore::new();
        for (k, v) in &self.vars {
            out.insert(k.clone(), graph.grad(*v));
        }
        out
    }
}
