//! Two-branch encoder / decoder MLP with manual backpropagation.
//!
//! Hidden layers compute `relu(layer_norm(x Wᵀ + b) * gain + shift)`; the
//! final decoder layer is a plain affine map. Batches are row-major
//! `[batch, features]` matrices.

use std::fmt::Debug;
use std::ops::AddAssign;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand, Zip};
use num_traits::Float;
use rand::Rng;

use super::architecture::{Architecture, LayerShape};

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Floating-point element type of a network.
pub trait Real:
    LinalgScalar + Float + ScalarOperand + AddAssign + Send + Sync + Debug + Default + 'static
{
    fn lit(v: f64) -> Self;
    fn widen(self) -> f64;
}

impl Real for f32 {
    fn lit(v: f64) -> Self {
        v as f32
    }
    fn widen(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn lit(v: f64) -> Self {
        v
    }
    fn widen(self) -> f64 {
        self
    }
}

/// Learned gain and shift applied after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAffine<T> {
    pub gain: Array1<T>,
    pub shift: Array1<T>,
}

/// Fully connected layer; weight is `[fan_out, fan_in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Array2<T>,
    pub bias: Array1<T>,
    pub norm: Option<NormAffine<T>>,
}

#[derive(Debug, Clone)]
struct DenseCache<T> {
    input: Array2<T>,
    // hidden layers only
    xhat: Option<Array2<T>>,
    inv_std: Option<Array1<T>>,
    output: Option<Array2<T>>,
}

/// Normalizes every row of `z` in place to zero mean and unit variance
/// (biased variance, `eps` added) and returns the per-row `1/σ`.
pub fn layer_norm_rows<T: Real>(z: &mut Array2<T>, eps: T) -> Array1<T> {
    let width = T::lit(z.ncols() as f64);
    let mut inv_std = Array1::zeros(z.nrows());
    for (mut row, inv) in z.axis_iter_mut(Axis(0)).zip(inv_std.iter_mut()) {
        let mean = row.sum() / width;
        row.mapv_inplace(|v| v - mean);
        let var = row.fold(T::zero(), |acc, &v| acc + v * v) / width;
        let is = (var + eps).sqrt().recip();
        row.mapv_inplace(|v| v * is);
        *inv = is;
    }
    inv_std
}

impl<T: Real> Dense<T> {
    pub fn zeros(shape: LayerShape) -> Self {
        Self {
            weight: Array2::zeros((shape.fan_out, shape.fan_in)),
            bias: Array1::zeros(shape.fan_out),
            norm: shape.hidden.then(|| NormAffine {
                gain: Array1::zeros(shape.fan_out),
                shift: Array1::zeros(shape.fan_out),
            }),
        }
    }

    /// Weights and biases `~ U(−1/√fan_in, 1/√fan_in)`, gain 1, shift 0.
    pub fn init<R: Rng + ?Sized>(shape: LayerShape, rng: &mut R) -> Self {
        let bound = 1.0 / (shape.fan_in as f64).sqrt();
        let mut layer = Self::zeros(shape);
        layer.weight.mapv_inplace(|_| T::lit(rng.random_range(-bound..bound)));
        layer.bias.mapv_inplace(|_| T::lit(rng.random_range(-bound..bound)));
        if let Some(norm) = layer.norm.as_mut() {
            norm.gain.fill(T::one());
        }
        layer
    }

    pub fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.nrows()
    }

    fn affine(&self, x: &ArrayView2<T>) -> Array2<T> {
        let mut z = Array2::zeros((x.nrows(), self.fan_out()));
        general_mat_mul(T::one(), x, &self.weight.t(), T::zero(), &mut z);
        z += &self.bias;
        z
    }

    fn activate(norm: &NormAffine<T>, xhat: &Array2<T>) -> Array2<T> {
        let mut y = xhat * &norm.gain;
        y += &norm.shift;
        y.mapv_inplace(|v| v.max(T::zero()));
        y
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Array2<T> {
        let mut z = self.affine(&x);
        match &self.norm {
            None => z,
            Some(norm) => {
                layer_norm_rows(&mut z, T::lit(LAYER_NORM_EPS));
                Self::activate(norm, &z)
            }
        }
    }

    fn forward_cached(&self, x: Array2<T>) -> (Array2<T>, DenseCache<T>) {
        let mut z = self.affine(&x.view());
        match &self.norm {
            None => {
                let cache = DenseCache { input: x, xhat: None, inv_std: None, output: None };
                (z, cache)
            }
            Some(norm) => {
                let inv_std = layer_norm_rows(&mut z, T::lit(LAYER_NORM_EPS));
                let y = Self::activate(norm, &z);
                let cache = DenseCache {
                    input: x,
                    xhat: Some(z),
                    inv_std: Some(inv_std),
                    output: Some(y.clone()),
                };
                (y, cache)
            }
        }
    }

    /// Accumulates this layer's parameter gradients into `grad` and returns
    /// the gradient with respect to the layer input when `want_input` is set.
    fn backward(
        &self,
        cache: &DenseCache<T>,
        mut d_out: Array2<T>,
        grad: &mut Dense<T>,
        want_input: bool,
    ) -> Option<Array2<T>> {
        let dz = match (&self.norm, &cache.xhat, &cache.inv_std, &cache.output) {
            (Some(norm), Some(xhat), Some(inv_std), Some(output)) => {
                // relu mask
                Zip::from(&mut d_out).and(output).for_each(|d, &y| {
                    if y <= T::zero() {
                        *d = T::zero();
                    }
                });
                let g = grad.norm.as_mut().expect("gradient layout matches network");
                g.gain += &(&d_out * xhat).sum_axis(Axis(0));
                g.shift += &d_out.sum_axis(Axis(0));

                let width = T::lit(d_out.ncols() as f64);
                let mut dxhat = d_out * &norm.gain;
                for ((mut row, xr), &is) in
                    dxhat.axis_iter_mut(Axis(0)).zip(xhat.axis_iter(Axis(0))).zip(inv_std)
                {
                    let mean_d = row.sum() / width;
                    let mean_dx = Zip::from(&row).and(&xr).fold(T::zero(), |acc, &d, &x| acc + d * x) / width;
                    Zip::from(&mut row).and(&xr).for_each(|d, &x| {
                        *d = is * (*d - mean_d - x * mean_dx);
                    });
                }
                dxhat
            }
            _ => d_out,
        };
        general_mat_mul(T::one(), &dz.t(), &cache.input, T::one(), &mut grad.weight);
        grad.bias += &dz.sum_axis(Axis(0));
        want_input.then(|| dz.dot(&self.weight))
    }
}

/// Network parameters (or, with the same layout, their gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub position: Vec<Dense<T>>,
    pub cycle: Vec<Dense<T>>,
    pub decoder: Vec<Dense<T>>,
}

/// Intermediate values kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    position: Vec<DenseCache<T>>,
    cycle: Vec<DenseCache<T>>,
    decoder: Vec<DenseCache<T>>,
    latent_width: usize,
}

fn run_chain<T: Real>(layers: &[Dense<T>], x: Array2<T>) -> (Array2<T>, Vec<DenseCache<T>>) {
    let mut caches = Vec::with_capacity(layers.len());
    let mut h = x;
    for layer in layers {
        let (next, cache) = layer.forward_cached(h);
        caches.push(cache);
        h = next;
    }
    (h, caches)
}

fn back_chain<T: Real>(
    layers: &[Dense<T>],
    caches: &[DenseCache<T>],
    grads: &mut [Dense<T>],
    d_out: Array2<T>,
    want_input: bool,
) -> Option<Array2<T>> {
    let mut d = Some(d_out);
    for (idx, ((layer, cache), grad)) in layers.iter().zip(caches).zip(grads.iter_mut()).enumerate().rev() {
        let need = idx > 0 || want_input;
        d = layer.backward(cache, d.take().expect("upstream gradient"), grad, need);
    }
    d
}

impl<T: Real> Network<T> {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            position: arch.position_layers().into_iter().map(Dense::zeros).collect(),
            cycle: arch.cycle_layers().into_iter().map(Dense::zeros).collect(),
            decoder: arch.decoder_layers().into_iter().map(Dense::zeros).collect(),
        }
    }

    /// Layers are initialized in storage order from one RNG stream.
    pub fn init<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Self {
        let mut make = |shapes: Vec<LayerShape>| -> Vec<Dense<T>> {
            shapes.into_iter().map(|s| Dense::init(s, &mut *rng)).collect()
        };
        let position = make(arch.position_layers());
        let cycle = make(arch.cycle_layers());
        let decoder = make(arch.decoder_layers());
        Self { position, cycle, decoder }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |layers: &[Dense<T>]| -> Vec<Dense<T>> {
            layers
                .iter()
                .map(|l| Dense::zeros(LayerShape { fan_in: l.fan_in(), fan_out: l.fan_out(), hidden: l.norm.is_some() }))
                .collect()
        };
        Self { position: z(&self.position), cycle: z(&self.cycle), decoder: z(&self.decoder) }
    }

    fn layers(&self) -> impl Iterator<Item = &Dense<T>> {
        self.position.iter().chain(&self.cycle).chain(&self.decoder)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense<T>> {
        self.position.iter_mut().chain(self.cycle.iter_mut()).chain(self.decoder.iter_mut())
    }

    /// Every parameter tensor in storage order: per layer weight (row-major),
    /// bias, then gain and shift when present.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for layer in self.layers() {
            out.push(layer.weight.as_slice().expect("standard layout"));
            out.push(layer.bias.as_slice().expect("standard layout"));
            if let Some(n) = &layer.norm {
                out.push(n.gain.as_slice().expect("standard layout"));
                out.push(n.shift.as_slice().expect("standard layout"));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::new();
        for layer in self.layers_mut() {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
            if let Some(n) = layer.norm.as_mut() {
                out.push(n.gain.as_slice_mut().expect("standard layout"));
                out.push(n.shift.as_slice_mut().expect("standard layout"));
            }
        }
        out
    }

    /// Human-readable labels matching [`Network::tensors`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        let groups = [("position", &self.position), ("cycle", &self.cycle), ("decoder", &self.decoder)];
        for (group, layers) in groups {
            for (i, layer) in layers.iter().enumerate() {
                out.push(format!("{group}.{i}.weight"));
                out.push(format!("{group}.{i}.bias"));
                if layer.norm.is_some() {
                    out.push(format!("{group}.{i}.gain"));
                    out.push(format!("{group}.{i}.shift"));
                }
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U + Copy) -> Network<U> {
        let conv = |layers: &[Dense<T>]| -> Vec<Dense<U>> {
            layers
                .iter()
                .map(|l| Dense {
                    weight: l.weight.mapv(f),
                    bias: l.bias.mapv(f),
                    norm: l.norm.as_ref().map(|n| NormAffine { gain: n.gain.mapv(f), shift: n.shift.mapv(f) }),
                })
                .collect()
        };
        Network { position: conv(&self.position), cycle: conv(&self.cycle), decoder: conv(&self.decoder) }
    }

    fn latent_width(&self) -> usize {
        self.position.last().map_or(0, Dense::fan_out)
    }

    /// Inference pass on normalized inputs `[B, 3]` and `[B, 1]`.
    pub fn forward(&self, position: ArrayView2<T>, cycle: ArrayView2<T>) -> Array2<T> {
        let chain = |layers: &[Dense<T>], x: Array2<T>| {
            layers.iter().fold(x, |h, layer| layer.forward(h.view()))
        };
        let a = chain(&self.position, position.to_owned());
        let b = chain(&self.cycle, cycle.to_owned());
        let latent = ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("equal batch sizes");
        chain(&self.decoder, latent)
    }

    /// Training pass; returns the output and the cache for [`Network::backward`].
    pub fn forward_train(
        &self,
        position: ArrayView2<T>,
        cycle: ArrayView2<T>,
    ) -> (Array2<T>, ForwardCache<T>) {
        let (a, position_cache) = run_chain(&self.position, position.to_owned());
        let (b, cycle_cache) = run_chain(&self.cycle, cycle.to_owned());
        let latent = ndarray::concatenate(Axis(1), &[a.view(), b.view()]).expect("equal batch sizes");
        let (out, decoder_cache) = run_chain(&self.decoder, latent);
        let cache = ForwardCache {
            position: position_cache,
            cycle: cycle_cache,
            decoder: decoder_cache,
            latent_width: self.latent_width(),
        };
        (out, cache)
    }

    /// Gradients of a scalar loss given `d_out = ∂loss/∂output`.
    pub fn backward(&self, cache: &ForwardCache<T>, d_out: Array2<T>) -> Network<T> {
        let mut grads = self.zeros_like();
        let d_latent = back_chain(&self.decoder, &cache.decoder, &mut grads.decoder, d_out, true)
            .expect("latent gradient requested");
        let w = cache.latent_width;
        let d_a = d_latent.slice(s![.., ..w]).to_owned();
        let d_b = d_latent.slice(s![.., w..]).to_owned();
        back_chain(&self.position, &cache.position, &mut grads.position, d_a, false);
        back_chain(&self.cycle, &cache.cycle, &mut grads.cycle, d_b, false);
        grads
    }
}
