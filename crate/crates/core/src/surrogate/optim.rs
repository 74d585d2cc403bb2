//! L1 loss, Adam and the plateau learning-rate schedule.

use ndarray::{Array2, ArrayView2, Zip};

use super::network::{Network, Real};
use crate::error::SurrogateError;

/// Mean absolute error over every component of every batch row.
pub fn l1_loss<T: Real>(pred: ArrayView2<T>, target: ArrayView2<T>) -> Result<T, SurrogateError> {
    if pred.dim() != target.dim() {
        return Err(SurrogateError::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    if pred.is_empty() {
        return Err(SurrogateError::Shape("empty batch".into()));
    }
    let total = Zip::from(&pred).and(&target).fold(T::zero(), |acc, &p, &t| acc + (p - t).abs());
    Ok(total / T::lit(pred.len() as f64))
}

/// `∂ l1_loss / ∂ pred`: `sign(pred − target) / count`, zero where they agree.
pub fn l1_loss_grad<T: Real>(pred: ArrayView2<T>, target: ArrayView2<T>) -> Array2<T> {
    let scale = T::lit(1.0 / pred.len() as f64);
    let mut grad = Array2::zeros(pred.raw_dim());
    Zip::from(&mut grad).and(&pred).and(&target).for_each(|g, &p, &t| {
        *g = if p > t {
            scale
        } else if p < t {
            -scale
        } else {
            T::zero()
        };
    });
    grad
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-6 }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &Network<T>, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<T>> = params.tensors().iter().map(|t| vec![T::zero(); t.len()]).collect();
        Self { config, m: zeros.clone(), v: zeros, step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update:
    /// `p −= lr · m̂ / (√v̂ + eps)`.
    pub fn step(&mut self, params: &mut Network<T>, grads: &Network<T>, lr: f64) {
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let bias1 = 1.0 - beta1.powi(self.step as i32);
        let bias2 = 1.0 - beta2.powi(self.step as i32);
        let (b1, b2) = (T::lit(beta1), T::lit(beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - beta1), T::lit(1.0 - beta2));
        let step_size = T::lit(lr / bias1);
        let inv_sqrt_bias2 = T::lit(1.0 / bias2.sqrt());
        let eps = T::lit(eps);

        let grads = grads.tensors();
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + one_b1 * gi;
                v[i] = b2 * v[i] + one_b2 * gi * gi;
                let denom = v[i].sqrt() * inv_sqrt_bias2 + eps;
                p[i] = p[i] - step_size * m[i] / denom;
            }
        }
    }
}

/// Divides the learning rate by `factor` once the monitored loss has failed
/// to drop strictly below its best value for `patience` consecutive calls.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    lr: f64,
    factor: f64,
    patience: usize,
    best: f64,
    stale: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, factor: f64, patience: usize) -> Self {
        Self { lr, factor, patience, best: f64::INFINITY, stale: 0 }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Records one epoch's validation loss; returns the learning rate to use next.
    pub fn observe(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best {
            self.best = val_loss;
            self.stale = 0;
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                self.lr /= self.factor;
                self.stale = 0;
            }
        }
        self.lr
    }
}
