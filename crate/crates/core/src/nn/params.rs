//! Named parameter sets with safetensors persistence.

use std::collections::HashMap;
use std::path::Path;

use indexmap::IndexMap;
use ndarray::{ArrayD, IxDyn};
use safetensors::tensor::TensorView;
use safetensors::{Dtype, SafeTensors};

use super::tape::{Tape, Var};
use super::Tensor;
use crate::error::{Error, Result};

/// Ordered name -> tensor map holding a model's trainable state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    params: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        self.params.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.params.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.params.values().map(|t| t.len()).sum()
    }

    /// Copy every parameter onto a tape as a leaf; returns name -> Var.
    pub fn bind(&self, tape: &mut Tape) -> IndexMap<String, Var> {
        self.params
            .iter()
            .map(|(name, value)| (name.clone(), tape.leaf(value.clone())))
            .collect()
    }

    /// Keep parameters whose names match `predicate`.
    pub fn subset(&self, predicate: impl Fn(&str) -> bool) -> ParamStore {
        ParamStore {
            params: self
                .params
                .iter()
                .filter(|(name, _)| predicate(name))
                .map(|(n, t)| (n.clone(), t.clone()))
                .collect(),
        }
    }

    /// Overwrite entries with those of `other` (names must already exist
    /// with matching shapes).
    pub fn assign_from(&mut self, other: &ParamStore) -> Result<()> {
        for (name, tensor) in other.iter() {
            let slot = self.params.get_mut(name).ok_or_else(|| {
                Error::ArtifactMismatch(format!("unknown parameter `{name}`"))
            })?;
            if slot.shape() != tensor.shape() {
                return Err(Error::ArtifactMismatch(format!(
                    "parameter `{name}` has shape {:?}, expected {:?}",
                    tensor.shape(),
                    slot.shape()
                )));
            }
            *slot = tensor.clone();
        }
        Ok(())
    }

    /// Serialize to a safetensors file (F64, names sorted).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut names: Vec<&String> = self.params.keys().collect();
        names.sort();
        let buffers: Vec<(String, Vec<usize>, Vec<u8>)> = names
            .iter()
            .map(|name| {
                let tensor = &self.params[name.as_str()];
                let bytes: Vec<u8> = tensor.iter().flat_map(|v| v.to_le_bytes()).collect();
                ((*name).clone(), tensor.shape().to_vec(), bytes)
            })
            .collect();
        let views: Vec<(String, TensorView)> = buffers
            .iter()
            .map(|(name, shape, bytes)| {
                let view = TensorView::new(Dtype::F64, shape.clone(), bytes)
                    .map_err(|e| Error::TensorStore(e.to_string()))?;
                Ok((name.clone(), view))
            })
            .collect::<Result<_>>()?;
        let data = safetensors::serialize(views, &None)
            .map_err(|e| Error::TensorStore(e.to_string()))?;
        std::fs::write(path, data)?;
        Ok(())
    }

    /// Load a safetensors file written by [`ParamStore::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let tensors =
            SafeTensors::deserialize(&bytes).map_err(|e| Error::TensorStore(e.to_string()))?;
        let mut names: Vec<String> = tensors.names().iter().map(|s| s.to_string()).collect();
        names.sort();
        let mut params = IndexMap::new();
        for name in names {
            let view = tensors
                .tensor(&name)
                .map_err(|e| Error::TensorStore(e.to_string()))?;
            if view.dtype() != Dtype::F64 {
                return Err(Error::TensorStore(format!(
                    "tensor `{name}` has dtype {:?}, expected F64",
                    view.dtype()
                )));
            }
            let data: Vec<f64> = view
                .data()
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let tensor = ArrayD::from_shape_vec(IxDyn(view.shape()), data)
                .map_err(|e| Error::TensorStore(e.to_string()))?;
            params.insert(name, tensor);
        }
        Ok(ParamStore { params })
    }

    /// Exact equality of names, shapes, and every scalar.
    pub fn identical_to(&self, other: &ParamStore) -> bool {
        if self.params.len() != other.params.len() {
            return false;
        }
        self.params.iter().all(|(name, tensor)| {
            other
                .get(name)
                .map(|o| o.shape() == tensor.shape() && o == tensor)
                .unwrap_or(false)
        })
    }
}

/// Gradient map keyed like the store it was pulled from.
pub type GradMap = HashMap<String, Tensor>;
