//! Dense f32 tensors with reverse-mode automatic differentiation.
//!
//! The op catalogue is exactly what the toy transformers, the defenses, and
//! the attack optimizers need: matmul against a 2-D right operand, elementwise
//! arithmetic with suffix broadcasting, embedding lookup, layer norm, softmax,
//! gelu, fused causal/padded attention, dropout, and a handful of scalar
//! losses. Model math runs in f32; losses, norms and layer statistics
//! accumulate in f64.

mod graph;
mod ops;
mod optim;

pub use graph::{Graph, NodeId};
pub use optim::{Optimizer, OptimizerKind};

use crate::error::TensorError;

/// A plain dense value. This is what crosses party boundaries: protocol
/// payloads are always detached snapshots, never graph nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
    pub requires_grad: bool,
    pub grad: Option<Vec<f32>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, TensorError> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(TensorError::ShapeData { shape, len: data.len() });
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(TensorError::ZeroDim { shape });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite { value: *v });
        }
        Ok(Self { shape, data, requires_grad: false, grad: None })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self { shape, data: vec![0.0; numel], requires_grad: false, grad: None }
    }

    pub fn scalar(v: f32) -> Self {
        Self { shape: vec![1], data: vec![v], requires_grad: false, grad: None }
    }

    pub fn filled(shape: Vec<usize>, v: f32) -> Self {
        let numel = shape.iter().product();
        Self { shape, data: vec![v; numel], requires_grad: false, grad: None }
    }

    /// Gaussian init, the std-0.02 convention used for all weight matrices.
    pub fn randn<R: rand::Rng>(shape: Vec<usize>, std: f32, rng: &mut R) -> Self {
        use rand_distr::{Distribution, StandardNormal};
        let numel = shape.iter().product();
        let data = (0..numel)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z as f32 * std
            })
            .collect();
        Self { shape, data, requires_grad: false, grad: None }
    }

    pub fn trainable(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// Accumulate a gradient contribution (allocating on first use).
    pub fn accumulate_grad(&mut self, g: &[f32]) {
        debug_assert_eq!(g.len(), self.data.len());
        let grad = self.grad.get_or_insert_with(|| vec![0.0; self.data.len()]);
        for (dst, src) in grad.iter_mut().zip(g) {
            *dst += *src;
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad = None;
    }

    /// Squared L2 distance to another tensor, f64 accumulation.
    pub fn sq_distance(&self, other: &Tensor) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| {
                let d = (*a - *b) as f64;
                d * d
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedTree;

    #[test]
    fn new_rejects_shape_data_mismatch() {
        let err = Tensor::new(vec![2, 3], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, TensorError::ShapeData { .. }));
    }

    #[test]
    fn new_rejects_non_finite() {
        let err = Tensor::new(vec![2], vec![1.0, f32::NAN]).unwrap_err();
        assert!(matches!(err, TensorError::NonFinite { .. }));
    }

    #[test]
    fn randn_is_seed_deterministic() {
        let tree = SeedTree::new(3);
        let a = Tensor::randn(vec![4, 4], 0.02, &mut tree.stream("w"));
        let b = Tensor::randn(vec![4, 4], 0.02, &mut tree.stream("w"));
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn grad_accumulates_additively() {
        let mut t = Tensor::zeros(vec![3]);
        t.accumulate_grad(&[1.0, 2.0, 3.0]);
        t.accumulate_grad(&[1.0, 1.0, 1.0]);
        assert_eq!(t.grad.as_deref(), Some(&[2.0, 3.0, 4.0][..]));
    }
}
