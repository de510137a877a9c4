//! The regression CNN: conv → ReLU → BN → pool, twice, then two dense layers.

use super::activation::{relu_backward_inplace, relu_inplace};
use super::batchnorm::{
    batchnorm_backward, batchnorm_forward_eval, batchnorm_forward_train, BatchNormCache, BatchNormParams,
};
use super::conv::{conv2d_backward_with, conv2d_forward, ConvParams};
use super::dense::{dense_backward, dense_forward, DenseParams};
use super::pool::{maxpool2x2_backward, maxpool2x2_forward, PoolOutput};
use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::hash::fnv1a64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const INPUT_SHAPE: [usize; 3] = [5, 26, 21];
pub const CONV1_CHANNELS: usize = 32;
pub const CONV2_CHANNELS: usize = 64;
pub const KERNEL: usize = 3;
pub const FLAT_LEN: usize = 960;
pub const HIDDEN: usize = 128;
pub const OUTPUTS: usize = 3;

/// Stable description of the layer stack, hashed into checkpoints.
pub const ARCHITECTURE: &str =
    "conv(5,32,3)|relu|bn(32)|maxpool2|conv(32,64,3)|relu|bn(64)|maxpool2|flatten(960)|dense(960,128)|relu|dense(128,3)";

pub fn architecture_hash() -> u64 {
    fnv1a64(ARCHITECTURE.as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub conv1: ConvParams,
    pub bn1: BatchNormParams,
    pub conv2: ConvParams,
    pub bn2: BatchNormParams,
    pub fc1: DenseParams,
    pub fc2: DenseParams,
}

/// Gradients of every learnable parameter, same layout as [`NetworkParams::learnable`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGrads {
    pub parts: Vec<Vec<f64>>,
}

impl NetworkGrads {
    pub fn flatten(&self) -> Vec<f64> {
        self.parts.concat()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Inference,
}

impl NetworkParams {
    /// All weights zero, BN at identity.
    pub fn zeros() -> Self {
        NetworkParams {
            conv1: ConvParams::zeros(INPUT_SHAPE[0], CONV1_CHANNELS, KERNEL),
            bn1: BatchNormParams::new(CONV1_CHANNELS),
            conv2: ConvParams::zeros(CONV1_CHANNELS, CONV2_CHANNELS, KERNEL),
            bn2: BatchNormParams::new(CONV2_CHANNELS),
            fc1: DenseParams::zeros(FLAT_LEN, HIDDEN),
            fc2: DenseParams::zeros(HIDDEN, OUTPUTS),
        }
    }

    /// He-normal weights, zero biases.
    pub fn he_init(rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros();
        let mut fill = |w: &mut [f64], fan_in: usize| {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            for v in w {
                *v = normal.sample(rng);
            }
        };
        let (k1, k2) = (p.conv1.patch_len(), p.conv2.patch_len());
        fill(&mut p.conv1.weight, k1);
        fill(&mut p.conv2.weight, k2);
        fill(&mut p.fc1.weight, FLAT_LEN);
        fill(&mut p.fc2.weight, HIDDEN);
        p
    }

    /// Learnable tensors in checkpoint order.
    pub fn learnable(&self) -> [&Vec<f64>; 12] {
        [
            &self.conv1.weight,
            &self.conv1.bias,
            &self.bn1.gamma,
            &self.bn1.beta,
            &self.conv2.weight,
            &self.conv2.bias,
            &self.bn2.gamma,
            &self.bn2.beta,
            &self.fc1.weight,
            &self.fc1.bias,
            &self.fc2.weight,
            &self.fc2.bias,
        ]
    }

    pub fn learnable_mut(&mut self) -> [&mut Vec<f64>; 12] {
        [
            &mut self.conv1.weight,
            &mut self.conv1.bias,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.conv2.weight,
            &mut self.conv2.bias,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            &mut self.fc1.weight,
            &mut self.fc1.bias,
            &mut self.fc2.weight,
            &mut self.fc2.bias,
        ]
    }

    pub fn n_learnable(&self) -> usize {
        self.learnable().iter().map(|p| p.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.learnable().iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn assign(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_learnable() {
            return Err(Error::Shape(format!(
                "{} values for {} learnable parameters",
                flat.len(),
                self.n_learnable()
            )));
        }
        let mut rest = flat;
        for p in self.learnable_mut() {
            let (head, tail) = rest.split_at(p.len());
            p.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Learnable values followed by the BN running statistics.
    pub fn state(&self) -> Vec<f64> {
        let mut out = self.flatten();
        for bn in [&self.bn1, &self.bn2] {
            out.extend_from_slice(&bn.running_mean);
            out.extend_from_slice(&bn.running_var);
        }
        out
    }

    pub fn state_len(&self) -> usize {
        self.n_learnable() + 2 * (CONV1_CHANNELS + CONV2_CHANNELS)
    }

    pub fn load_state(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.state_len() {
            return Err(Error::Shape(format!(
                "{} values for a network state of {}",
                values.len(),
                self.state_len()
            )));
        }
        let n = self.n_learnable();
        self.assign(&values[..n])?;
        let mut rest = &values[n..];
        for bn in [&mut self.bn1, &mut self.bn2] {
            for v in [&mut bn.running_mean, &mut bn.running_var] {
                let (head, tail) = rest.split_at(v.len());
                v.copy_from_slice(head);
                rest = tail;
            }
        }
        if self.bn1.running_var.iter().chain(&self.bn2.running_var).any(|v| !(*v > 0.0)) {
            return Err(Error::Data("batch norm running variance must be positive".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.state().iter().all(|v| v.is_finite())
    }
}

fn check_input(x: &Tensor4) -> Result<()> {
    let [_, c, h, w] = x.shape();
    if [c, h, w] != INPUT_SHAPE || x.batch() == 0 {
        return Err(Error::Shape(format!(
            "network input must be (batch, {}, {}, {}), got {:?}",
            INPUT_SHAPE[0],
            INPUT_SHAPE[1],
            INPUT_SHAPE[2],
            x.shape()
        )));
    }
    Ok(())
}

/// Intermediates of a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    input: Tensor4,
    z1: Tensor4,
    bn1: BatchNormCache,
    pool1: PoolOutput,
    z2: Tensor4,
    bn2: BatchNormCache,
    pool2: PoolOutput,
    h1: Vec<f64>,
    a1: Vec<f64>,
    pub output: Vec<f64>,
}

impl ForwardCache {
    pub fn bn_caches(&self) -> (&BatchNormCache, &BatchNormCache) {
        (&self.bn1, &self.bn2)
    }
}

/// Batch output, `batch × 3` row-major.
pub fn forward(params: &NetworkParams, x: &Tensor4, mode: Mode) -> Result<Vec<f64>> {
    match mode {
        Mode::Train => Ok(forward_train(params, x)?.output),
        Mode::Inference => forward_inference(params, x, |_| {}),
    }
}

fn forward_inference(params: &NetworkParams, x: &Tensor4, mut trace: impl FnMut(Vec<usize>)) -> Result<Vec<f64>> {
    check_input(x)?;
    let batch = x.batch();
    let mut z = conv2d_forward(x, &params.conv1)?;
    trace(z.shape().to_vec());
    relu_inplace(z.data_mut());
    let z = batchnorm_forward_eval(&z, &params.bn1)?;
    let p = maxpool2x2_forward(&z)?.y;
    trace(p.shape().to_vec());
    let mut z = conv2d_forward(&p, &params.conv2)?;
    trace(z.shape().to_vec());
    relu_inplace(z.data_mut());
    let z = batchnorm_forward_eval(&z, &params.bn2)?;
    let p = maxpool2x2_forward(&z)?.y;
    trace(p.shape().to_vec());
    trace(vec![batch, p.example_len()]);
    let mut h = dense_forward(p.data(), &params.fc1)?;
    trace(vec![batch, HIDDEN]);
    relu_inplace(&mut h);
    let out = dense_forward(&h, &params.fc2)?;
    trace(vec![batch, OUTPUTS]);
    Ok(out)
}

/// Shapes after conv1, pool1, conv2, pool2, flatten, fc1 and fc2.
pub fn shape_trace(params: &NetworkParams, x: &Tensor4) -> Result<Vec<Vec<usize>>> {
    let mut shapes = Vec::new();
    forward_inference(params, x, |s| shapes.push(s))?;
    Ok(shapes)
}

pub fn forward_train(params: &NetworkParams, x: &Tensor4) -> Result<ForwardCache> {
    check_input(x)?;
    let z1 = conv2d_forward(x, &params.conv1)?;
    let mut a = z1.clone();
    relu_inplace(a.data_mut());
    let (n1, bn1) = batchnorm_forward_train(&a, &params.bn1)?;
    let pool1 = maxpool2x2_forward(&n1)?;
    let z2 = conv2d_forward(&pool1.y, &params.conv2)?;
    let mut a = z2.clone();
    relu_inplace(a.data_mut());
    let (n2, bn2) = batchnorm_forward_train(&a, &params.bn2)?;
    let pool2 = maxpool2x2_forward(&n2)?;
    let h1 = dense_forward(pool2.y.data(), &params.fc1)?;
    let mut a1 = h1.clone();
    relu_inplace(&mut a1);
    let output = dense_forward(&a1, &params.fc2)?;
    Ok(ForwardCache {
        input: x.clone(),
        z1,
        bn1,
        pool1,
        z2,
        bn2,
        pool2,
        h1,
        a1,
        output,
    })
}

/// Gradients of a scalar loss given `dout = ∂loss/∂output`.
pub fn backward(params: &NetworkParams, cache: &ForwardCache, dout: &[f64]) -> Result<NetworkGrads> {
    let g_fc2 = dense_backward(&cache.a1, &params.fc2, dout)?;
    let mut dh = g_fc2.dx;
    relu_backward_inplace(&cache.h1, &mut dh);
    let g_fc1 = dense_backward(cache.pool2.y.data(), &params.fc1, &dh)?;
    let dp2 = Tensor4::from_vec(cache.pool2.y.shape(), g_fc1.dx)?;
    let dn2 = maxpool2x2_backward(cache.z2.shape(), &cache.pool2, &dp2)?;
    let g_bn2 = batchnorm_backward(&dn2, &cache.bn2, &params.bn2)?;
    let mut dz2 = g_bn2.dx;
    relu_backward_inplace(cache.z2.data(), dz2.data_mut());
    let g_conv2 = conv2d_backward_with(&cache.pool1.y, &params.conv2, &dz2, true)?;
    let dp1 = g_conv2.dx.expect("input gradient requested");
    let dn1 = maxpool2x2_backward(cache.z1.shape(), &cache.pool1, &dp1)?;
    let g_bn1 = batchnorm_backward(&dn1, &cache.bn1, &params.bn1)?;
    let mut dz1 = g_bn1.dx;
    relu_backward_inplace(cache.z1.data(), dz1.data_mut());
    let g_conv1 = conv2d_backward_with(&cache.input, &params.conv1, &dz1, false)?;
    Ok(NetworkGrads {
        parts: vec![
            g_conv1.dweight,
            g_conv1.dbias,
            g_bn1.dgamma,
            g_bn1.dbeta,
            g_conv2.dweight,
            g_conv2.dbias,
            g_bn2.dgamma,
            g_bn2.dbeta,
            g_fc1.dweight,
            g_fc1.dbias,
            g_fc2.dweight,
            g_fc2.dbias,
        ],
    })
}
