use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RlError;

/// Fully connected network with rectifier hidden layers and a linear output.
///
/// All parameters live in one flat vector. Layer `l` maps `sizes[l]` inputs
/// to `sizes[l + 1]` outputs and stores its weights row-major
/// (`out x in`) followed by its biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer pre-activations and activations of one forward pass.
struct Cache {
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Result<Self, RlError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(RlError::Architecture(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self { sizes: sizes.to_vec(), params: vec![0.0; param_count(sizes)] })
    }

    /// He-uniform weights, zero biases.
    pub fn random(sizes: &[usize], rng: &mut impl Rng) -> Result<Self, RlError> {
        let mut net = Self::zeros(sizes)?;
        let mut offset = 0;
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.gen_range(-bound..bound);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, RlError> {
        let net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(RlError::ShapeMismatch { expected: net.params.len(), found: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(RlError::Architecture("non-finite parameter".into()));
        }
        Ok(Self { sizes: sizes.to_vec(), params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layer_offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.sizes.windows(2).scan(0, |offset, w| {
            let start = *offset;
            *offset += w[0] * w[1] + w[1];
            Some((start, w[0], w[1]))
        })
    }

    fn check_input(&self, x: &[f64]) -> Result<(), RlError> {
        if x.len() != self.input_len() {
            return Err(RlError::ShapeMismatch { expected: self.input_len(), found: x.len() });
        }
        Ok(())
    }

    fn forward_cached(&self, x: &[f64]) -> Cache {
        let layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(layers + 1);
        let mut pre = Vec::with_capacity(layers);
        activations.push(x.to_vec());
        for (l, (offset, fan_in, fan_out)) in self.layer_offsets().enumerate() {
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let input = &activations[l];
            let z: Vec<f64> = (0..fan_out)
                .map(|j| {
                    let row = &weights[j * fan_in..(j + 1) * fan_in];
                    biases[j] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>()
                })
                .collect();
            let a = if l + 1 < layers { z.iter().map(|&v| v.max(0.0)).collect() } else { z.clone() };
            pre.push(z);
            activations.push(a);
        }
        Cache { activations, pre }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RlError> {
        self.check_input(x)?;
        Ok(self.forward_cached(x).activations.pop().unwrap())
    }

    /// Loss `1/2 * mean (Q(s, a) - target)^2` over the batch and its gradient
    /// with respect to every parameter.
    pub fn td_loss_and_gradient(&self, batch: &[(&[f64], usize, f64)]) -> Result<(f64, Vec<f64>), RlError> {
        if batch.is_empty() {
            return Err(RlError::EmptyBatch);
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let offsets: Vec<_> = self.layer_offsets().collect();
        for &(x, action, target) in batch {
            self.check_input(x)?;
            if action >= self.output_len() {
                return Err(RlError::ShapeMismatch { expected: self.output_len(), found: action + 1 });
            }
            let cache = self.forward_cached(x);
            let q = cache.activations.last().unwrap()[action];
            let err = q - target;
            loss += 0.5 * err * err * scale;

            let mut delta = vec![0.0; self.output_len()];
            delta[action] = err * scale;
            for l in (0..offsets.len()).rev() {
                let (offset, fan_in, fan_out) = offsets[l];
                let input = &cache.activations[l];
                for j in 0..fan_out {
                    let d = delta[j];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[offset + j * fan_in..offset + (j + 1) * fan_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                    grad[offset + fan_in * fan_out + j] += d;
                }
                if l > 0 {
                    let weights = &self.params[offset..offset + fan_in * fan_out];
                    let mut prev = vec![0.0; fan_in];
                    for j in 0..fan_out {
                        let d = delta[j];
                        if d == 0.0 {
                            continue;
                        }
                        for (p, w) in prev.iter_mut().zip(&weights[j * fan_in..(j + 1) * fan_in]) {
                            *p += w * d;
                        }
                    }
                    for (p, z) in prev.iter_mut().zip(&cache.pre[l - 1]) {
                        if *z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok((loss, grad))
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
