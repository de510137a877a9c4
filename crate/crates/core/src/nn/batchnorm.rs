//! Per-channel batch normalization over (batch, height, width).

use super::tensor::Tensor4;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNormParams {
    pub fn new(channels: usize) -> Self {
        BatchNormParams {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    /// Fold one training batch into the running statistics (variance
    /// uses the unbiased estimate).
    pub fn update_running(&mut self, cache: &BatchNormCache) {
        let n = cache.count as f64;
        for c in 0..self.channels() {
            self.running_mean[c] = (1.0 - BN_MOMENTUM) * self.running_mean[c] + BN_MOMENTUM * cache.mean[c];
            self.running_var[c] =
                (1.0 - BN_MOMENTUM) * self.running_var[c] + BN_MOMENTUM * cache.var[c] * n / (n - 1.0);
        }
    }
}

/// Saved batch statistics for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    pub x_hat: Tensor4,
    pub inv_std: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGrads {
    pub dx: Tensor4,
    pub dgamma: Vec<f64>,
    pub dbeta: Vec<f64>,
}

fn check(x: &Tensor4, params: &BatchNormParams) -> Result<()> {
    if x.channels() != params.channels() {
        return Err(Error::Shape(format!(
            "batch norm over {} channels got {}",
            params.channels(),
            x.channels()
        )));
    }
    Ok(())
}

/// Training mode: normalize with batch statistics. Running statistics are
/// left alone; see [`BatchNormParams::update_running`].
pub fn batchnorm_forward_train(x: &Tensor4, params: &BatchNormParams) -> Result<(Tensor4, BatchNormCache)> {
    check(x, params)?;
    let [batch, channels, _, _] = x.shape();
    let plane = x.plane_len();
    let count = batch * plane;
    if count < 2 {
        return Err(Error::Statistics(count));
    }
    let n = count as f64;
    let mut x_hat = Tensor4::zeros(x.shape());
    let mut y = Tensor4::zeros(x.shape());
    let mut inv_std = vec![0.0; channels];
    let mut means = vec![0.0; channels];
    let mut vars = vec![0.0; channels];
    for c in 0..channels {
        let planes = || (0..batch).map(move |b| (b * channels + c) * plane);
        let mean = planes()
            .map(|s| x.data()[s..s + plane].iter().sum::<f64>())
            .sum::<f64>()
            / n;
        let var = planes()
            .map(|s| x.data()[s..s + plane].iter().map(|v| (v - mean) * (v - mean)).sum::<f64>())
            .sum::<f64>()
            / n;
        let istd = 1.0 / (var + BN_EPS).sqrt();
        inv_std[c] = istd;
        means[c] = mean;
        vars[c] = var;
        let (g, bta) = (params.gamma[c], params.beta[c]);
        for s in planes() {
            for k in s..s + plane {
                let h = (x.data()[k] - mean) * istd;
                x_hat.data_mut()[k] = h;
                y.data_mut()[k] = g * h + bta;
            }
        }
    }
    Ok((
        y,
        BatchNormCache {
            x_hat,
            inv_std,
            mean: means,
            var: vars,
            count,
        },
    ))
}

/// Inference mode: normalize with the running statistics.
pub fn batchnorm_forward_eval(x: &Tensor4, params: &BatchNormParams) -> Result<Tensor4> {
    check(x, params)?;
    let [batch, channels, _, _] = x.shape();
    let plane = x.plane_len();
    let mut y = x.clone();
    for b in 0..batch {
        for c in 0..channels {
            let scale = params.gamma[c] / (params.running_var[c] + BN_EPS).sqrt();
            let shift = params.beta[c] - params.running_mean[c] * scale;
            let s = (b * channels + c) * plane;
            for v in &mut y.data_mut()[s..s + plane] {
                *v = *v * scale + shift;
            }
        }
    }
    Ok(y)
}

/// Full batch-statistics gradient:
/// `dx = γ·σ⁻¹/n · (n·dy − Σdy − x̂·Σ(dy·x̂))`.
pub fn batchnorm_backward(dy: &Tensor4, cache: &BatchNormCache, params: &BatchNormParams) -> Result<BatchNormGrads> {
    if dy.shape() != cache.x_hat.shape() {
        return Err(Error::Shape(format!(
            "batch norm gradient shape {:?} does not match forward {:?}",
            dy.shape(),
            cache.x_hat.shape()
        )));
    }
    let [batch, channels, _, _] = dy.shape();
    let plane = dy.plane_len();
    let n = (batch * plane) as f64;
    let mut dx = Tensor4::zeros(dy.shape());
    let mut dgamma = vec![0.0; channels];
    let mut dbeta = vec![0.0; channels];
    for c in 0..channels {
        let (mut sum_dy, mut sum_dy_xhat) = (0.0, 0.0);
        for b in 0..batch {
            let s = (b * channels + c) * plane;
            for k in s..s + plane {
                sum_dy += dy.data()[k];
                sum_dy_xhat += dy.data()[k] * cache.x_hat.data()[k];
            }
        }
        dgamma[c] = sum_dy_xhat;
        dbeta[c] = sum_dy;
        let scale = params.gamma[c] * cache.inv_std[c] / n;
        for b in 0..batch {
            let s = (b * channels + c) * plane;
            for k in s..s + plane {
                dx.data_mut()[k] = scale * (n * dy.data()[k] - sum_dy - cache.x_hat.data()[k] * sum_dy_xhat);
            }
        }
    }
    Ok(BatchNormGrads { dx, dgamma, dbeta })
}
