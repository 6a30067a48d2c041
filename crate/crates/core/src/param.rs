//! Trainable tensors and their gradient buffers.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Which optimizer group, and therefore which learning rate, a tensor uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamGroup {
    Encoder,
    Head,
}

/// A named 2-D tensor. Vectors are stored as `1 × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Array2<f64>,
    pub grad: Array2<f64>,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Array2<f64>) -> Self {
        let grad = Array2::zeros(value.raw_dim());
        Param { name: name.into(), value, grad }
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Param::new(name, Array2::zeros((rows, cols)))
    }

    pub fn normal<R: Rng>(name: impl Into<String>, rows: usize, cols: usize, std: f64, rng: &mut R) -> Self {
        let dist = Normal::new(0.0, std).expect("finite std");
        Param::new(name, Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng)))
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.value.iter().all(|v| v.is_finite())
    }
}

/// Visits every trainable tensor with its group, in a fixed order.
pub trait Parameterized {
    fn params(&self) -> Vec<&Param>;
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
