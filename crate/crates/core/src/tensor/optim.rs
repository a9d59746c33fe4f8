//! SGD and Adam. Optimizer state is keyed by parameter name and never
//! crosses a party boundary.

use std::collections::HashMap;

use super::Tensor;
use crate::error::TensorError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f32, beta2: f32, eps: f32 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone)]
struct AdamState {
    m: Vec<f32>,
    v: Vec<f32>,
    t: u64,
}

#[derive(Debug)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f32,
    state: HashMap<String, AdamState>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f32) -> Self {
        Self { kind, lr, state: HashMap::new() }
    }

    /// Update one named parameter in place and clear its gradient.
    /// A trainable parameter without a gradient is an error.
    pub fn step_param(&mut self, name: &str, param: &mut Tensor) -> Result<(), TensorError> {
        if !param.requires_grad {
            return Ok(());
        }
        let Some(grad) = param.grad.take() else {
            return Err(TensorError::MissingGrad { name: name.to_string() });
        };
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.lr;
                for (p, g) in param.data_mut().iter_mut().zip(&grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let st = self.state.entry(name.to_string()).or_insert_with(|| AdamState {
                    m: vec![0.0; grad.len()],
                    v: vec![0.0; grad.len()],
                    t: 0,
                });
                st.t += 1;
                let bc1 = 1.0 - beta1.powi(st.t as i32);
                let bc2 = 1.0 - beta2.powi(st.t as i32);
                let lr = self.lr;
                for ((p, &g), (m, v)) in param
                    .data_mut()
                    .iter_mut()
                    .zip(&grad)
                    .zip(st.m.iter_mut().zip(st.v.iter_mut()))
                {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let mhat = *m / bc1;
                    let vhat = *v / bc2;
                    *p -= lr * mhat / (vhat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_update() {
        let mut p = Tensor::new(vec![1], vec![1.0]).unwrap().trainable();
        p.grad = Some(vec![0.5]);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1);
        opt.step_param("p", &mut p).unwrap();
        assert_eq!(p.data(), &[0.95]);
        assert!(p.grad.is_none());
    }

    #[test]
    fn sgd_zero_grad_is_identity() {
        let mut p = Tensor::new(vec![2], vec![1.0, -2.0]).unwrap().trainable();
        p.grad = Some(vec![0.0, 0.0]);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1);
        opt.step_param("p", &mut p).unwrap();
        assert_eq!(p.data(), &[1.0, -2.0]);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // At t=1 the bias-corrected update is lr * g/|g| / (1 + eps) for any
        // nonzero g, so p moves by almost exactly lr.
        let mut p = Tensor::new(vec![1], vec![0.0]).unwrap().trainable();
        p.grad = Some(vec![1.0]);
        let mut opt = Optimizer::new(OptimizerKind::adam(), 0.1);
        opt.step_param("p", &mut p).unwrap();
        assert!((p.data()[0] + 0.1).abs() < 1e-6, "got {}", p.data()[0]);
    }

    #[test]
    fn missing_grad_rejected() {
        let mut p = Tensor::new(vec![1], vec![0.0]).unwrap().trainable();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1);
        let err = opt.step_param("wq", &mut p).unwrap_err();
        assert!(matches!(err, TensorError::MissingGrad { .. }));
    }

    #[test]
    fn frozen_param_untouched() {
        let mut p = Tensor::new(vec![1], vec![3.0]).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1);
        opt.step_param("p", &mut p).unwrap();
        assert_eq!(p.data(), &[3.0]);
    }
}
