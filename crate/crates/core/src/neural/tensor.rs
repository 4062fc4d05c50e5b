//! Named parameter tensors with paired gradient storage.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

/// A dense real tensor with a same-shape gradient buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub grad: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            values: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), values.len());
        let n = values.len();
        Self {
            shape: shape.to_vec(),
            values,
            grad: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Ordered, named set of parameter tensors. Iteration order is insertion
/// order, which is fixed per model kind, so optimizer state and
/// finite-difference sweeps are deterministic.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelParams {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor) {
        assert!(
            !self.index.contains_key(name),
            "duplicate parameter {name}"
        );
        self.index.insert(name.to_string(), self.tensors.len());
        self.names.push(name.to_string());
        self.tensors.push(tensor);
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.tensors[self.index[name]]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        &mut self.tensors[self.index[name]]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(self.tensors.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.tensors.iter_mut())
    }

    pub fn zero_grads(&mut self) {
        self.tensors.iter_mut().for_each(Tensor::zero_grad);
    }

    pub fn total_len(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_shape_matches_storage() {
        let t = Tensor::zeros(&[3, 4]);
        assert_eq!(t.len(), 12);
        assert_eq!(t.grad.len(), 12);
    }

    #[test]
    fn params_preserve_insertion_order() {
        let mut p = ModelParams::new();
        p.insert("b", Tensor::zeros(&[2]));
        p.insert("a", Tensor::zeros(&[1]));
        let names: Vec<&str> = p.iter().map(|(n, _)| n).collect();
        assert_eq!(names, vec!["b", "a"]);
        assert_eq!(p.total_len(), 3);
    }

    #[test]
    fn zero_grads_clears_everything() {
        let mut p = ModelParams::new();
        p.insert("w", Tensor::zeros(&[2]));
        p.get_mut("w").grad[0] = 5.0;
        p.zero_grads();
        assert_eq!(p.get("w").grad, vec![0.0, 0.0]);
    }
}
