//! Named parameter store with per-parameter gradient slots.

use std::collections::BTreeMap;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::neural::tensor::Tensor;
use crate::rng::Rng;

/// One trainable tensor and its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Param {
    pub value: Tensor,
    pub grad: Tensor,
}

impl Param {
    fn new(value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Param { value, grad }
    }
}

/// All parameters of a model, keyed by name. A `BTreeMap` keeps
/// iteration order deterministic, which checkpointing and the SGD sweep
/// rely on.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: BTreeMap<String, Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a tensor initialized to zero.
    pub fn add_zeros(&mut self, name: &str, shape: &[usize]) {
        self.insert(name, Tensor::zeros(shape));
    }

    /// Register a tensor with entries uniform in ±0.08 (recurrent
    /// weights and embeddings).
    pub fn add_uniform(&mut self, name: &str, shape: &[usize], rng: &mut Rng) {
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.08..0.08)).collect();
        self.insert(name, Tensor::from_vec(shape, data).expect("shape/data"));
    }

    /// Register a rank-2 tensor with scaled-uniform entries
    /// ±sqrt(6/(fan_in+fan_out)) (affine layers).
    pub fn add_scaled_uniform(&mut self, name: &str, shape: &[usize], rng: &mut Rng) {
        debug_assert_eq!(shape.len(), 2);
        let bound = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        self.insert(name, Tensor::from_vec(shape, data).expect("shape/data"));
    }

    pub fn insert(&mut self, name: &str, value: Tensor) {
        debug_assert!(
            !self.params.contains_key(name),
            "duplicate parameter {name}"
        );
        self.params.insert(name.to_string(), Param::new(value));
    }

    pub fn get(&self, name: &str) -> &Param {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn value(&self, name: &str) -> &[f64] {
        self.get(name).value.data()
    }

    pub fn value_mut(&mut self, name: &str) -> &mut [f64] {
        self.params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .value
            .data_mut()
    }

    pub fn grad_mut(&mut self, name: &str) -> &mut [f64] {
        self.params
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
            .grad
            .data_mut()
    }

    pub fn shape(&self, name: &str) -> &[usize] {
        self.get(name).value.shape()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn num_scalars(&self) -> usize {
        self.params.values().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Add a gradient buffer produced by [`GradBuffer`] into the store.
    pub fn accumulate(&mut self, buf: &GradBuffer) {
        for (name, g) in &buf.grads {
            let slot = self
                .params
                .get_mut(name)
                .unwrap_or_else(|| panic!("unknown parameter {name}"))
                .grad
                .data_mut();
            for (si, gi) in slot.iter_mut().zip(g.iter()) {
                *si += gi;
            }
        }
    }

    /// Plain SGD with exponential decay: lr_eff = lr·decayᵉ, then
    /// θ ← θ − lr_eff·∇θ, and gradients are zeroed. Errors if any
    /// gradient entry is non-finite, naming the offending parameter.
    pub fn sgd_step(&mut self, lr: f64, decay: f64, epoch: usize) -> Result<f64> {
        let lr_eff = lr * decay.powi(epoch as i32);
        for (name, p) in self.params.iter_mut() {
            if p.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NanGradient(name.clone()));
            }
            for (v, g) in p.value.data_mut().iter_mut().zip(p.grad.iter()) {
                *v -= lr_eff * g;
            }
            p.grad.fill(0.0);
        }
        Ok(lr_eff)
    }

    /// Scale all gradients so their global L2 norm is at most `max_norm`.
    pub fn clip_grad_norm(&mut self, max_norm: f64) {
        let mut sq = 0.0;
        for p in self.params.values() {
            sq += p.grad.iter().map(|g| g * g).sum::<f64>();
        }
        let norm = sq.sqrt();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for p in self.params.values_mut() {
                p.grad.data_mut().iter_mut().for_each(|g| *g *= scale);
            }
        }
    }
}

/// Gradient accumulation detached from the store, used so batch members
/// can be processed on worker threads and merged in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct GradBuffer {
    grads: BTreeMap<String, Vec<f64>>,
}

impl GradBuffer {
    pub fn for_store(store: &ParamStore) -> Self {
        let grads = store
            .iter()
            .map(|(name, p)| (name.to_string(), vec![0.0; p.value.len()]))
            .collect();
        GradBuffer { grads }
    }

    pub fn slot(&mut self, name: &str) -> &mut [f64] {
        self.grads
            .get_mut(name)
            .unwrap_or_else(|| panic!("unknown gradient slot {name}"))
    }

    pub fn merge(&mut self, other: &GradBuffer) {
        for (name, g) in &other.grads {
            let slot = self
                .grads
                .get_mut(name)
                .unwrap_or_else(|| panic!("unknown gradient slot {name}"));
            for (si, gi) in slot.iter_mut().zip(g.iter()) {
                *si += gi;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.grads.values_mut() {
            g.iter_mut().for_each(|x| *x *= s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn lr_decay_schedule() {
        let mut store = ParamStore::new();
        store.add_zeros("w", &[2]);
        // lr 0.001 at epoch 0.
        assert!((store.sgd_step(0.001, 0.9, 0).unwrap() - 0.001).abs() < 1e-15);
        // 0.001 * 0.9^2 = 0.00081.
        assert!((store.sgd_step(0.001, 0.9, 2).unwrap() - 0.00081).abs() < 1e-15);
    }

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let mut rng = rng::seeded(3);
        let mut store = ParamStore::new();
        store.add_uniform("w", &[4], &mut rng);
        let before = store.value("w").to_vec();
        store.sgd_step(0.5, 1.0, 0).unwrap();
        assert_eq!(before, store.value("w"));
    }

    #[test]
    fn nan_gradient_aborts_with_name() {
        let mut store = ParamStore::new();
        store.add_zeros("w", &[1]);
        store.add_zeros("bad", &[1]);
        store.grad_mut("bad")[0] = f64::NAN;
        match store.sgd_step(0.1, 1.0, 0) {
            Err(Error::NanGradient(name)) => assert_eq!(name, "bad"),
            other => panic!("expected NanGradient, got {other:?}"),
        }
    }

    #[test]
    fn sgd_applies_effective_rate() {
        let mut store = ParamStore::new();
        store.add_zeros("w", &[1]);
        store.grad_mut("w")[0] = 2.0;
        store.sgd_step(0.001, 0.9, 2).unwrap();
        assert!((store.value("w")[0] - (-0.00081 * 2.0)).abs() < 1e-15);
        // Gradient cleared after the step.
        assert_eq!(store.get("w").grad.data()[0], 0.0);
    }
}
