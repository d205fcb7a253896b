//! The shared linear+softmax classification head.

use ndarray::{Array1, Array2, Ix1, Ix2};

use crate::dataset::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::nn::{derive_rng, normal, zeros, ParamStore, Tensor};

pub const HEAD_WEIGHT: &str = "head.weight";
pub const HEAD_BIAS: &str = "head.bias";

/// Weight K x H plus bias K, K = 6 classes. Stored row-per-class, so the
/// forward pass is `x . W^T + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ClassifierHead {
    /// Zero-mean Gaussian weights (std 0.02) and zero bias.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = derive_rng(seed, 0x6865_6164);
        ClassifierHead {
            weight: normal(&[NUM_CLASSES, hidden], 0.02, &mut rng)
                .into_dimensionality::<Ix2>()
                .unwrap(),
            bias: Array1::zeros(NUM_CLASSES),
        }
    }

    pub fn hidden(&self) -> usize {
        self.weight.ncols()
    }

    /// Install into a parameter store under the shared head names.
    pub fn register(&self, params: &mut ParamStore) {
        params.insert(HEAD_WEIGHT, self.weight.clone().into_dyn());
        params.insert(HEAD_BIAS, self.bias.clone().into_dyn());
    }

    /// View over the head tensors of a parameter store.
    pub fn from_params(params: &ParamStore) -> Result<Self> {
        let weight = head_tensor(params, HEAD_WEIGHT)?
            .view()
            .into_dimensionality::<Ix2>()
            .map_err(|e| Error::ArtifactMismatch(e.to_string()))?
            .to_owned();
        let bias = head_tensor(params, HEAD_BIAS)?
            .view()
            .into_dimensionality::<Ix1>()
            .map_err(|e| Error::ArtifactMismatch(e.to_string()))?
            .to_owned();
        if weight.nrows() != NUM_CLASSES || bias.len() != NUM_CLASSES {
            return Err(Error::ArtifactMismatch(format!(
                "head shapes {:?}/{:?} do not give {NUM_CLASSES} classes",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(ClassifierHead { weight, bias })
    }
}

fn head_tensor<'a>(params: &'a ParamStore, name: &str) -> Result<&'a Tensor> {
    params
        .get(name)
        .ok_or_else(|| Error::ArtifactMismatch(format!("missing `{name}` parameter")))
}

/// Replace head tensors with a fresh initialization.
pub fn reinit_head_params(params: &mut ParamStore, hidden: usize, seed: u64) {
    let head = ClassifierHead::init(hidden, seed);
    params.insert(HEAD_WEIGHT, head.weight.into_dyn());
    params.insert(HEAD_BIAS, zeros(&[NUM_CLASSES]));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_has_expected_shapes_and_zero_bias() {
        let head = ClassifierHead::init(16, 1);
        assert_eq!(head.weight.dim(), (6, 16));
        assert!(head.bias.iter().all(|&b| b == 0.0));
        // seeded determinism
        assert_eq!(head.weight, ClassifierHead::init(16, 1).weight);
        assert_ne!(head.weight, ClassifierHead::init(16, 2).weight);
    }

    #[test]
    fn roundtrips_through_param_store() {
        let head = ClassifierHead::init(8, 3);
        let mut params = ParamStore::new();
        head.register(&mut params);
        let back = ClassifierHead::from_params(&params).unwrap();
        assert_eq!(back, head);
    }
}
