use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use slicelab_core::RngStream;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("input length {got} does not match network input dim {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite input at index {0}")]
    NonFiniteInput(usize),
    #[error("upstream gradient length {got} does not match output dim {expected}")]
    GradMismatch { expected: usize, got: usize },
    #[error("parameter vector length {got} does not match network size {expected}")]
    ParamMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
    Softmax,
}

/// Architecture descriptor: input width plus one (width, activation) per layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input_dim: usize,
    pub layers: Vec<(usize, Activation)>,
}

impl NetSpec {
    /// Classic MLP: `hidden` tanh layers followed by one `out_activation` head.
    pub fn mlp(input_dim: usize, hidden: &[usize], output_dim: usize, out_activation: Activation) -> Self {
        let mut layers: Vec<(usize, Activation)> =
            hidden.iter().map(|&h| (h, Activation::Tanh)).collect();
        layers.push((output_dim, out_activation));
        Self { input_dim, layers }
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|&(w, _)| w).unwrap_or(self.input_dim)
    }

    pub fn param_count(&self) -> usize {
        let mut count = 0;
        let mut prev = self.input_dim;
        for &(width, _) in &self.layers {
            count += prev * width + width;
            prev = width;
        }
        count
    }
}

/// Intermediate activations kept for the backward pass.
pub struct ForwardCache {
    /// Post-activation value of every layer, input first.
    post: Vec<Vec<f64>>,
    /// Pre-activation value of every layer.
    pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.post.last().expect("cache has at least the input")
    }
}

/// Fully connected network over a flat f64 parameter vector.
///
/// Layer l owns `in * out` weights (input-major) followed by `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    spec: NetSpec,
    params: Vec<f64>,
}

impl DenseNet {
    /// Xavier-style seeded initialization; biases start at zero.
    pub fn init(spec: NetSpec, rng: &mut RngStream) -> Self {
        let mut params = vec![0.0; spec.param_count()];
        let mut offset = 0;
        let mut prev = spec.input_dim;
        for &(width, _) in &spec.layers {
            let scale = (2.0 / (prev + width) as f64).sqrt();
            for w in params.iter_mut().skip(offset).take(prev * width) {
                // Box-Muller keeps the dependency surface small here.
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                *w = z * scale;
            }
            offset += prev * width + width;
            prev = width;
        }
        Self { spec, params }
    }

    pub fn from_params(spec: NetSpec, params: Vec<f64>) -> Result<Self, RlError> {
        if params.len() != spec.param_count() {
            return Err(RlError::ParamMismatch {
                expected: spec.param_count(),
                got: params.len(),
            });
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RlError> {
        Ok(self.forward_cached(x)?.post.into_iter().last().expect("output"))
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, RlError> {
        if x.len() != self.spec.input_dim {
            return Err(RlError::DimMismatch {
                expected: self.spec.input_dim,
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(RlError::NonFiniteInput(i));
        }
        let mut post = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.spec.layers.len());
        let mut offset = 0;
        let mut input_dim = self.spec.input_dim;
        for &(width, activation) in &self.spec.layers {
            let weights = &self.params[offset..offset + input_dim * width];
            let biases = &self.params[offset + input_dim * width..offset + input_dim * width + width];
            let prev = post.last().expect("previous activation");
            let mut z = biases.to_vec();
            for (i, &xi) in prev.iter().enumerate() {
                let row = &weights[i * width..(i + 1) * width];
                for (j, &w) in row.iter().enumerate() {
                    z[j] += xi * w;
                }
            }
            let a = apply_activation(&z, activation);
            pre.push(z);
            post.push(a);
            offset += input_dim * width + width;
            input_dim = width;
        }
        Ok(ForwardCache { post, pre })
    }

    /// Gradient of `dot(upstream, forward(x))` with respect to every
    /// parameter, flat and aligned with [`DenseNet::params`].
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Vec<f64>, RlError> {
        let out_dim = self.spec.output_dim();
        if upstream.len() != out_dim {
            return Err(RlError::GradMismatch {
                expected: out_dim,
                got: upstream.len(),
            });
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = upstream.to_vec();

        // Layer offsets, front to back.
        let mut offsets = Vec::with_capacity(self.spec.layers.len());
        let mut offset = 0;
        let mut prev = self.spec.input_dim;
        for &(width, _) in &self.spec.layers {
            offsets.push((offset, prev, width));
            offset += prev * width + width;
            prev = width;
        }

        for (l, &(width, activation)) in self.spec.layers.iter().enumerate().rev() {
            let (off, in_dim, _) = offsets[l];
            // delta currently holds dL/d(post-activation of layer l).
            let dz = activation_backward(self.pre_post(cache, l), activation, &delta);
            let a_prev = &cache.post[l];
            let (w_slice, _) = self.params[off..].split_at(in_dim * width);
            // dL/dW and dL/db
            for i in 0..in_dim {
                let gi = &mut grads[off + i * width..off + (i + 1) * width];
                for (j, g) in gi.iter_mut().enumerate() {
                    *g += a_prev[i] * dz[j];
                }
            }
            grads[off + in_dim * width..off + in_dim * width + width].copy_from_slice(&dz);
            // Propagate to the previous layer's post-activation.
            if l > 0 {
                let mut prev_delta = vec![0.0; in_dim];
                for (i, pd) in prev_delta.iter_mut().enumerate() {
                    let row = &w_slice[i * width..(i + 1) * width];
                    *pd = row.iter().zip(&dz).map(|(w, d)| w * d).sum();
                }
                delta = prev_delta;
            }
        }
        Ok(grads)
    }

    fn pre_post<'a>(&self, cache: &'a ForwardCache, layer: usize) -> (&'a [f64], &'a [f64]) {
        (&cache.pre[layer], &cache.post[layer + 1])
    }
}

fn apply_activation(z: &[f64], activation: Activation) -> Vec<f64> {
    match activation {
        Activation::Identity => z.to_vec(),
        Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
        Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
        Activation::Softmax => {
            let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
            let sum: f64 = exp.iter().sum();
            exp.iter().map(|v| v / sum).collect()
        }
    }
}

/// dL/d(pre-activation) given dL/d(post-activation).
fn activation_backward((pre, post): (&[f64], &[f64]), activation: Activation, upstream: &[f64]) -> Vec<f64> {
    match activation {
        Activation::Identity => upstream.to_vec(),
        Activation::Tanh => post
            .iter()
            .zip(upstream)
            .map(|(a, g)| g * (1.0 - a * a))
            .collect(),
        Activation::Relu => pre
            .iter()
            .zip(upstream)
            .map(|(z, g)| if *z > 0.0 { *g } else { 0.0 })
            .collect(),
        Activation::Softmax => {
            // J^T g with J_jk = p_j (1{j=k} - p_k)
            let dot: f64 = post.iter().zip(upstream).map(|(p, g)| p * g).sum();
            post.iter()
                .zip(upstream)
                .map(|(p, g)| p * (g - dot))
                .collect()
        }
    }
}
