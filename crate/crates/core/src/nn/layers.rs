//! Layer kernels and a sequential stack with exact reverse-mode gradients.
//!
//! Signals are single samples: `[n]` for dense layers and `[channels, length]`
//! for the 1-D convolution and pooling layers. Minibatches are handled by the
//! caller accumulating per-sample gradients.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{softmax, softmax_backward};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const CONV_KERNEL: usize = 4;
/// Left zero-padding for "same" output length; the right side gets
/// `CONV_KERNEL - 1 - CONV_PAD_LEFT`. Output j sees inputs j-1 ..= j+2.
pub const CONV_PAD_LEFT: usize = 1;
pub const POOL_WINDOW: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    Conv1d {
        in_channels: usize,
        filters: usize,
        activation: Activation,
    },
    MaxPool1d,
    Softmax,
}

impl LayerSpec {
    fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Dense { input, output, .. } if input == 0 || output == 0 => {
                Err(Error::invalid("dense dimensions must be positive"))
            }
            LayerSpec::Conv1d {
                in_channels, filters, ..
            } if in_channels == 0 || filters == 0 => Err(Error::invalid("conv dimensions must be positive")),
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")))
            }
            _ => Ok(()),
        }
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense { input, output, .. } => vec![vec![output, input], vec![output]],
            LayerSpec::Conv1d {
                in_channels, filters, ..
            } => vec![vec![filters, in_channels, CONV_KERNEL], vec![filters]],
            _ => Vec::new(),
        }
    }

    /// Glorot-uniform limit `sqrt(6 / (fan_in + fan_out))`.
    fn init_limit(&self) -> f64 {
        let (fan_in, fan_out) = match *self {
            LayerSpec::Dense { input, output, .. } => (input, output),
            LayerSpec::Conv1d {
                in_channels, filters, ..
            } => (in_channels * CONV_KERNEL, filters * CONV_KERNEL),
            _ => return 0.0,
        };
        (6.0 / (fan_in + fan_out) as f64).sqrt()
    }
}

fn activate(act: Activation, v: &mut [f64]) {
    if act == Activation::Relu {
        v.iter_mut().for_each(|x| *x = x.max(0.0));
    }
}

fn activation_grad(act: Activation, pre: &[f64], dy: &mut [f64]) {
    if act == Activation::Relu {
        for (g, p) in dy.iter_mut().zip(pre) {
            if *p <= 0.0 {
                *g = 0.0;
            }
        }
    }
}

/// `activation(W x + b)` with `W` of shape `[out, in]`.
pub fn dense_forward(x: &[f64], w: &Tensor, b: &[f64], act: Activation) -> Result<Vec<f64>> {
    let mut y = dense_pre(x, w, b)?;
    activate(act, &mut y);
    Ok(y)
}

fn dense_pre(x: &[f64], w: &Tensor, b: &[f64]) -> Result<Vec<f64>> {
    let [out, input] = w.shape() else {
        return Err(Error::shape("dense weight must be 2-D"));
    };
    if x.len() != *input || b.len() != *out {
        return Err(Error::shape(format!(
            "dense {input}->{out} given input {} and bias {}",
            x.len(),
            b.len()
        )));
    }
    let wd = w.data();
    Ok((0..*out)
        .map(|o| {
            let row = &wd[o * input..(o + 1) * input];
            b[o] + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
        })
        .collect())
}

/// Same-length cross-correlation: `x` is `[channels, length]`, `kernels` is
/// `[filters, channels, 4]`, output `[filters, length]`.
pub fn conv1d_forward(x: &Tensor, kernels: &Tensor, bias: &[f64], act: Activation) -> Result<Tensor> {
    let mut y = conv1d_pre(x, kernels, bias)?;
    activate(act, y.data_mut());
    Ok(y)
}

fn conv_dims(x: &Tensor, kernels: &Tensor, bias: &[f64]) -> Result<(usize, usize, usize)> {
    let [filters, channels, k] = kernels.shape() else {
        return Err(Error::shape("conv kernels must be 3-D"));
    };
    let [xc, len] = x.shape() else {
        return Err(Error::shape("conv input must be [channels, length]"));
    };
    if *k != CONV_KERNEL || xc != channels || bias.len() != *filters {
        return Err(Error::shape(format!(
            "conv kernels {:?} incompatible with input {:?} / bias {}",
            kernels.shape(),
            x.shape(),
            bias.len()
        )));
    }
    Ok((*filters, *channels, *len))
}

fn conv1d_pre(x: &Tensor, kernels: &Tensor, bias: &[f64]) -> Result<Tensor> {
    let (filters, channels, len) = conv_dims(x, kernels, bias)?;
    let xd = x.data();
    let wd = kernels.data();
    let mut out = vec![0.0; filters * len];
    for f in 0..filters {
        let row = &mut out[f * len..(f + 1) * len];
        row.iter_mut().for_each(|v| *v = bias[f]);
        for c in 0..channels {
            let xs = &xd[c * len..(c + 1) * len];
            let ws = &wd[(f * channels + c) * CONV_KERNEL..][..CONV_KERNEL];
            for (m, &w) in ws.iter().enumerate() {
                // input index p = j + m - pad
                let (j0, p0) = if m < CONV_PAD_LEFT {
                    (CONV_PAD_LEFT - m, 0)
                } else {
                    (0, m - CONV_PAD_LEFT)
                };
                if p0 >= len || j0 >= len {
                    continue;
                }
                let n = (len - j0).min(len - p0);
                for (o, xv) in row[j0..j0 + n].iter_mut().zip(&xs[p0..p0 + n]) {
                    *o += w * xv;
                }
            }
        }
    }
    Tensor::from_vec(&[filters, len], out)
}

/// Non-overlapping window-2 max; a trailing odd element is dropped.
/// Returns the pooled tensor and the flat input index chosen per output.
pub fn maxpool1d_forward(x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let [channels, len] = x.shape() else {
        return Err(Error::shape("pool input must be [channels, length]"));
    };
    if *len < POOL_WINDOW {
        return Err(Error::shape(format!("pool input length {len} < 2")));
    }
    let out_len = len / POOL_WINDOW;
    let xd = x.data();
    let mut out = Vec::with_capacity(channels * out_len);
    let mut arg = Vec::with_capacity(channels * out_len);
    for c in 0..*channels {
        for i in 0..out_len {
            let base = c * len + i * POOL_WINDOW;
            let best = if xd[base + 1] > xd[base] { base + 1 } else { base };
            out.push(xd[best]);
            arg.push(best);
        }
    }
    Ok((Tensor::from_vec(&[*channels, out_len], out)?, arg))
}

/// Inverted-dropout masks, reproducible per `(seed, call index)`.
#[derive(Debug, Clone)]
pub struct DropoutStream {
    seed: u64,
    calls: u64,
}

impl DropoutStream {
    pub fn new(seed: u64) -> Self {
        DropoutStream { seed, calls: 0 }
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    fn next_mask(&mut self, len: usize, rate: f64) -> Vec<f64> {
        let mask = dropout_mask(len, rate, self.seed, self.calls);
        self.calls += 1;
        mask
    }
}

fn dropout_mask(len: usize, rate: f64, seed: u64, call_index: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, Purpose::Dropout, call_index);
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Identity in eval mode; in train mode zeroes each element with probability
/// `rate` and scales survivors by `1 / (1 - rate)`.
pub fn dropout_forward(x: &[f64], rate: f64, mode: Mode, seed: u64, call_index: u64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x.to_vec());
    }
    let mask = dropout_mask(x.len(), rate, seed, call_index);
    Ok(x.iter().zip(&mask).map(|(v, m)| v * m).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    spec: LayerSpec,
    params: Vec<Tensor>,
}

impl Layer {
    pub fn spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }
}

#[derive(Debug, Clone)]
enum Cache {
    Dense { input: Tensor, pre: Vec<f64> },
    Dropout { mask: Option<Vec<f64>> },
    Conv { input: Tensor, pre: Vec<f64> },
    Pool { in_shape: Vec<usize>, arg: Vec<usize> },
    Softmax { probs: Vec<f64> },
}

/// Everything backward needs from one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    caches: Vec<Cache>,
    /// Hash of every relu on/off state and pool choice. Two passes with equal
    /// fingerprints took the same piecewise-linear branch.
    pub fingerprint: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sequential {
    layers: Vec<Layer>,
}

impl Sequential {
    /// Builds the stack with Glorot-uniform weights and zero biases. Layer `i`
    /// draws from init stream `first_stream + i`.
    pub fn new(specs: &[LayerSpec], seed: u64, first_stream: u64) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            spec.validate()?;
            let mut rng = rng::stream(seed, Purpose::Init, first_stream + i as u64);
            let limit = spec.init_limit();
            let params = spec
                .param_shapes()
                .iter()
                .enumerate()
                .map(|(pi, shape)| {
                    let mut t = Tensor::zeros(shape);
                    if pi == 0 {
                        t.data_mut()
                            .iter_mut()
                            .for_each(|v| *v = rng.random_range(-limit..=limit));
                    }
                    t
                })
                .collect();
            layers.push(Layer { spec: *spec, params });
        }
        Ok(Sequential { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| &l.params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| &mut l.params).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|t| t.len()).sum()
    }

    pub fn zero_grads(&self) -> Vec<Tensor> {
        self.params().iter().map(|t| Tensor::zeros(t.shape())).collect()
    }

    pub fn forward(&self, x: &Tensor, mode: Mode, dropout: &mut DropoutStream) -> Result<(Tensor, Trace)> {
        if !x.is_finite() {
            return Err(Error::NonFinite("network input"));
        }
        let mut hasher = DefaultHasher::new();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            let (next, cache) = match layer.spec {
                LayerSpec::Dense { activation, .. } => {
                    let pre = dense_pre(cur.data(), &layer.params[0], layer.params[1].data())?;
                    let mut y = pre.clone();
                    activate(activation, &mut y);
                    if activation == Activation::Relu {
                        hash_signs(&pre, &mut hasher);
                    }
                    (Tensor::vector(y), Cache::Dense { input: cur, pre })
                }
                LayerSpec::Conv1d { activation, .. } => {
                    let pre = conv1d_pre(&cur, &layer.params[0], layer.params[1].data())?;
                    let mut y = pre.clone();
                    activate(activation, y.data_mut());
                    if activation == Activation::Relu {
                        hash_signs(pre.data(), &mut hasher);
                    }
                    let pre = pre.into_data();
                    (y, Cache::Conv { input: cur, pre })
                }
                LayerSpec::MaxPool1d => {
                    let (y, arg) = maxpool1d_forward(&cur)?;
                    arg.hash(&mut hasher);
                    let in_shape = cur.shape().to_vec();
                    (y, Cache::Pool { in_shape, arg })
                }
                LayerSpec::Dropout { rate } => {
                    if mode == Mode::Train && rate > 0.0 {
                        let mask = dropout.next_mask(cur.len(), rate);
                        cur.data_mut().iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                        (cur, Cache::Dropout { mask: Some(mask) })
                    } else {
                        (cur, Cache::Dropout { mask: None })
                    }
                }
                LayerSpec::Softmax => {
                    let probs = softmax(cur.data())?;
                    (Tensor::vector(probs.clone()), Cache::Softmax { probs })
                }
            };
            caches.push(cache);
            cur = next;
        }
        if !cur.is_finite() {
            return Err(Error::NonFinite("network output"));
        }
        Ok((
            cur,
            Trace {
                caches,
                fingerprint: hasher.finish(),
            },
        ))
    }

    /// Back-propagates `dy` (gradient w.r.t. the stack output), adding
    /// parameter gradients into `grads` (ordered like [`Self::params`]).
    /// Returns the gradient w.r.t. the stack input.
    pub fn backward(&self, trace: &Trace, dy: Tensor, grads: &mut [Tensor]) -> Result<Tensor> {
        if trace.caches.len() != self.layers.len() {
            return Err(Error::shape("trace does not belong to this network"));
        }
        let mut slot = grads.len();
        let mut dy = dy;
        for (layer, cache) in self.layers.iter().zip(&trace.caches).rev() {
            let np = layer.params.len();
            if slot < np {
                return Err(Error::shape("gradient buffer too short"));
            }
            slot -= np;
            dy = match (layer.spec, cache) {
                (LayerSpec::Dense { activation, .. }, Cache::Dense { input, pre }) => {
                    let mut dpre = dy.into_data();
                    activation_grad(activation, pre, &mut dpre);
                    let w = &layer.params[0];
                    let n_in = input.len();
                    let (gw, rest) = grads[slot..].split_at_mut(1);
                    let gw = gw[0].data_mut();
                    let gb = rest[0].data_mut();
                    let x = input.data();
                    let mut dx = vec![0.0; n_in];
                    for (o, &g) in dpre.iter().enumerate() {
                        if g == 0.0 {
                            continue;
                        }
                        gb[o] += g;
                        let row = &w.data()[o * n_in..(o + 1) * n_in];
                        let grow = &mut gw[o * n_in..(o + 1) * n_in];
                        for i in 0..n_in {
                            grow[i] += g * x[i];
                            dx[i] += g * row[i];
                        }
                    }
                    Tensor::from_vec(input.shape(), dx)?
                }
                (LayerSpec::Conv1d { activation, .. }, Cache::Conv { input, pre }) => {
                    let mut dpre = dy.into_data();
                    activation_grad(activation, pre, &mut dpre);
                    let (gw, rest) = grads[slot..].split_at_mut(1);
                    conv1d_backward(input, &layer.params[0], &dpre, gw[0].data_mut(), rest[0].data_mut())
                }
                (LayerSpec::MaxPool1d, Cache::Pool { in_shape, arg }) => {
                    let mut dx = Tensor::zeros(in_shape);
                    let d = dx.data_mut();
                    for (g, &i) in dy.data().iter().zip(arg) {
                        d[i] += g;
                    }
                    dx
                }
                (LayerSpec::Dropout { .. }, Cache::Dropout { mask }) => {
                    let mut dy = dy;
                    if let Some(mask) = mask {
                        dy.data_mut().iter_mut().zip(mask).for_each(|(g, m)| *g *= m);
                    }
                    dy
                }
                (LayerSpec::Softmax, Cache::Softmax { probs }) => Tensor::vector(softmax_backward(probs, dy.data())),
                _ => return Err(Error::shape("trace does not belong to this network")),
            };
        }
        Ok(dy)
    }
}

fn conv1d_backward(input: &Tensor, kernels: &Tensor, dpre: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Tensor {
    let [filters, channels, _] = kernels.shape() else {
        unreachable!("validated in forward")
    };
    let (filters, channels) = (*filters, *channels);
    let len = input.shape()[1];
    let xd = input.data();
    let wd = kernels.data();
    let mut dx = vec![0.0; channels * len];
    for f in 0..filters {
        let g = &dpre[f * len..(f + 1) * len];
        gb[f] += g.iter().sum::<f64>();
        for c in 0..channels {
            let xs = &xd[c * len..(c + 1) * len];
            let dxs = &mut dx[c * len..(c + 1) * len];
            let widx = (f * channels + c) * CONV_KERNEL;
            for m in 0..CONV_KERNEL {
                let (j0, p0) = if m < CONV_PAD_LEFT {
                    (CONV_PAD_LEFT - m, 0)
                } else {
                    (0, m - CONV_PAD_LEFT)
                };
                if p0 >= len || j0 >= len {
                    continue;
                }
                let n = (len - j0).min(len - p0);
                let w = wd[widx + m];
                let mut acc = 0.0;
                for ((gv, xv), dxv) in g[j0..j0 + n].iter().zip(&xs[p0..p0 + n]).zip(&mut dxs[p0..p0 + n]) {
                    acc += gv * xv;
                    *dxv += w * gv;
                }
                gw[widx + m] += acc;
            }
        }
    }
    Tensor::from_vec(input.shape(), dx).expect("input shape is valid")
}

fn hash_signs(pre: &[f64], hasher: &mut DefaultHasher) {
    for chunk in pre.chunks(64) {
        let mut bits = 0u64;
        for (i, v) in chunk.iter().enumerate() {
            if *v > 0.0 {
                bits |= 1 << i;
            }
        }
        bits.hash(hasher);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(len: usize) -> Tensor {
        Tensor::from_vec(&[1, len], (0..len).map(|i| i as f64 + 1.0).collect()).unwrap()
    }

    /// Direct evaluation of the documented alignment.
    fn conv_oracle(x: &[f64], k: &[f64; 4], b: f64) -> Vec<f64> {
        let len = x.len() as isize;
        (0..len)
            .map(|j| {
                b + (0..4)
                    .map(|m| {
                        let p = j - 1 + m as isize;
                        if (0..len).contains(&p) {
                            k[m] * x[p as usize]
                        } else {
                            0.0
                        }
                    })
                    .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn dense_identity_and_bias() {
        let w = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            dense_forward(&[3.0, -4.0], &w, &[0.0, 0.0], Activation::Linear).unwrap(),
            [3.0, -4.0]
        );
        assert_eq!(
            dense_forward(&[0.0, 0.0], &w, &[0.5, -2.0], Activation::Linear).unwrap(),
            [0.5, -2.0]
        );
        assert_eq!(
            dense_forward(&[-1.0, 0.0], &w, &[0.0, 0.0], Activation::Relu).unwrap(),
            [0.0, 0.0]
        );
        assert!(dense_forward(&[1.0], &w, &[0.0, 0.0], Activation::Linear).is_err());
    }

    #[test]
    fn conv_zero_kernel_gives_zero() {
        let k = Tensor::zeros(&[3, 1, 4]);
        let y = conv1d_forward(&ramp(8), &k, &[0.0; 3], Activation::Relu).unwrap();
        assert_eq!(y.shape(), [3, 8]);
        assert!(y.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn conv_shift_kernel_is_identity() {
        let x = ramp(8);
        let kern = [0.0, 1.0, 0.0, 0.0];
        let k = Tensor::from_vec(&[1, 1, 4], kern.to_vec()).unwrap();
        let y = conv1d_forward(&x, &k, &[0.0], Activation::Linear).unwrap();
        assert_eq!(y.data(), conv_oracle(x.data(), &kern, 0.0));
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv_ones_kernel_on_constant() {
        let c = 2.5;
        let x = Tensor::from_vec(&[1, 8], vec![c; 8]).unwrap();
        let kern = [1.0; 4];
        let k = Tensor::from_vec(&[1, 1, 4], kern.to_vec()).unwrap();
        let y = conv1d_forward(&x, &k, &[0.0], Activation::Linear).unwrap();
        let oracle = conv_oracle(x.data(), &kern, 0.0);
        assert_eq!(y.data(), oracle);
        assert!(y.data()[1..6].iter().all(|v| *v == 4.0 * c));
        assert_eq!([y.data()[0], y.data()[6], y.data()[7]], [3.0 * c, 3.0 * c, 2.0 * c]);
    }

    #[test]
    fn conv_matches_oracle_multichannel() {
        let x = Tensor::from_vec(&[2, 5], vec![0.3, -1.0, 2.0, 0.5, 1.5, 1.0, 0.0, -0.5, 2.0, -2.0]).unwrap();
        let kd = vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8];
        let k = Tensor::from_vec(&[1, 2, 4], kd.clone()).unwrap();
        let y = conv1d_forward(&x, &k, &[0.25], Activation::Linear).unwrap();
        let a = conv_oracle(&x.data()[..5], &[kd[0], kd[1], kd[2], kd[3]], 0.25);
        let b = conv_oracle(&x.data()[5..], &[kd[4], kd[5], kd[6], kd[7]], 0.0);
        for (j, v) in y.data().iter().enumerate() {
            assert!((v - (a[j] + b[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn maxpool_cases() {
        let x = Tensor::from_vec(&[1, 4], vec![1.0, 3.0, 2.0, 0.0]).unwrap();
        assert_eq!(maxpool1d_forward(&x).unwrap().0.data(), [3.0, 2.0]);
        let x = Tensor::from_vec(&[1, 6], vec![7.0; 6]).unwrap();
        assert_eq!(maxpool1d_forward(&x).unwrap().0.data(), [7.0; 3]);
        let x = ramp(5);
        let (y, _) = maxpool1d_forward(&x).unwrap();
        assert_eq!(y.shape(), [1, 2]);
        assert_eq!(y.data(), [2.0, 4.0]);
        assert!(maxpool1d_forward(&ramp(1)).is_err());
    }

    #[test]
    fn dropout_modes() {
        let x = [1.0, -2.0, 3.0];
        assert_eq!(dropout_forward(&x, 0.0, Mode::Train, 1, 0).unwrap(), x);
        assert_eq!(dropout_forward(&x, 0.5, Mode::Eval, 1, 0).unwrap(), x);
        assert!(dropout_forward(&x, 1.0, Mode::Train, 1, 0).is_err());
        let a = dropout_forward(&x, 0.5, Mode::Train, 9, 4).unwrap();
        assert_eq!(a, dropout_forward(&x, 0.5, Mode::Train, 9, 4).unwrap());
        for (o, i) in a.iter().zip(&x) {
            assert!(*o == 0.0 || *o == 2.0 * i);
        }
    }

    #[test]
    fn dropout_preserves_expectation() {
        let trials = 100_000u64;
        let mean = (0..trials)
            .map(|i| dropout_forward(&[3.0], 0.5, Mode::Train, 42, i).unwrap()[0])
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 3.0).abs() <= 0.02 * 3.0, "mean {mean}");
    }

    #[test]
    fn maxpool_output_is_window_max() {
        let x = Tensor::from_vec(&[2, 7], (0..14).map(|i| ((i * 37) % 11) as f64 - 5.0).collect()).unwrap();
        let (y, _) = maxpool1d_forward(&x).unwrap();
        for c in 0..2 {
            for i in 0..3 {
                let w = &x.data()[c * 7 + 2 * i..c * 7 + 2 * i + 2];
                assert_eq!(y.data()[c * 3 + i], w[0].max(w[1]));
            }
        }
    }

    #[test]
    fn init_is_seeded() {
        let specs = [LayerSpec::Dense {
            input: 4,
            output: 3,
            activation: Activation::Relu,
        }];
        let a = Sequential::new(&specs, 5, 0).unwrap();
        assert_eq!(a, Sequential::new(&specs, 5, 0).unwrap());
        assert_ne!(a, Sequential::new(&specs, 6, 0).unwrap());
        let limit = (6.0f64 / 7.0).sqrt();
        assert!(a.params()[0].data().iter().all(|v| v.abs() <= limit));
        assert!(a.params()[1].data().iter().all(|v| *v == 0.0));
        assert!(Sequential::new(&[LayerSpec::Dropout { rate: 1.0 }], 0, 0).is_err());
    }
}
