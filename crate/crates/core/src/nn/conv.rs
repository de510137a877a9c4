//! Valid (unpadded) stride-1 2-D cross-correlation, lowered to GEMM via im2col.

use rayon::prelude::*;

use super::tensor::Tensor4;
use crate::error::{Error, Result};

/// Kernels `(out, in, k, k)` row-major plus one bias per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvParams {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        ConvParams {
            in_channels,
            out_channels,
            kernel,
            weight: vec![0.0; out_channels * in_channels * kernel * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    /// Inner dimension of the lowered product, `in·k·k`.
    pub fn patch_len(&self) -> usize {
        self.in_channels * self.kernel * self.kernel
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (h + 1 - self.kernel, w + 1 - self.kernel)
    }

    fn check_input(&self, x: &Tensor4) -> Result<()> {
        let [_, c, h, w] = x.shape();
        if self.weight.len() != self.out_channels * self.patch_len() || self.bias.len() != self.out_channels {
            return Err(Error::Shape(format!(
                "conv parameters hold {} weights and {} biases for {}x{}x{k}x{k}",
                self.weight.len(),
                self.bias.len(),
                self.out_channels,
                self.in_channels,
                k = self.kernel
            )));
        }
        if c != self.in_channels {
            return Err(Error::Shape(format!(
                "conv expects {} input channels, got {c}",
                self.in_channels
            )));
        }
        if h < self.kernel || w < self.kernel || self.kernel == 0 {
            return Err(Error::Shape(format!(
                "conv input {h}x{w} is smaller than the {k}x{k} kernel",
                k = self.kernel
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub dx: Option<Tensor4>,
    pub dweight: Vec<f64>,
    pub dbias: Vec<f64>,
}

/// `C = A·B (+ C if accumulate)` for row-major contiguous operands.
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: callers pass slices whose extents cover the strided m×k, k×n
    // and m×n views (checked by the debug asserts in the callers' shapes).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            if accumulate { 1.0 } else { 0.0 },
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Unfold one example `(C, H, W)` into a `(C·k·k) × (OH·OW)` patch matrix.
fn im2col(x: &[f64], c: usize, h: usize, w: usize, k: usize, col: &mut [f64]) {
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let p = oh * ow;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut col[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let src = (ci * h + oy + ky) * w + kx;
                    dst[oy * ow..(oy + 1) * ow].copy_from_slice(&x[src..src + ow]);
                }
            }
        }
    }
}

/// Fold a patch-matrix gradient back onto the example's input gradient.
fn col2im(col: &[f64], c: usize, h: usize, w: usize, k: usize, dx: &mut [f64]) {
    let (oh, ow) = (h + 1 - k, w + 1 - k);
    let p = oh * ow;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &col[row * p..(row + 1) * p];
                for oy in 0..oh {
                    let dst = (ci * h + oy + ky) * w + kx;
                    for (d, s) in dx[dst..dst + ow].iter_mut().zip(&src[oy * ow..(oy + 1) * ow]) {
                        *d += s;
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward(x: &Tensor4, params: &ConvParams) -> Result<Tensor4> {
    params.check_input(x)?;
    let [batch, c, h, w] = x.shape();
    let (oh, ow) = params.output_hw(h, w);
    let p = oh * ow;
    let kk = params.patch_len();
    let co = params.out_channels;
    let mut y = Tensor4::zeros([batch, co, oh, ow]);
    y.data_mut()
        .par_chunks_mut(co * p)
        .enumerate()
        .for_each_init(
            || vec![0.0; kk * p],
            |col, (b, yb)| {
                im2col(x.example(b), c, h, w, params.kernel, col);
                gemm(co, kk, p, &params.weight, (kk as isize, 1), col, (p as isize, 1), yb, false);
                for (plane, &bias) in yb.chunks_mut(p).zip(&params.bias) {
                    for v in plane {
                        *v += bias;
                    }
                }
            },
        );
    Ok(y)
}

/// Gradients of `sum(dy ⊙ conv(x))`. `need_dx = false` skips the input gradient.
pub fn conv2d_backward_with(x: &Tensor4, params: &ConvParams, dy: &Tensor4, need_dx: bool) -> Result<ConvGrads> {
    params.check_input(x)?;
    let [batch, c, h, w] = x.shape();
    let (oh, ow) = params.output_hw(h, w);
    let co = params.out_channels;
    if dy.shape() != [batch, co, oh, ow] {
        return Err(Error::Shape(format!(
            "conv output gradient has shape {:?}, expected {:?}",
            dy.shape(),
            [batch, co, oh, ow]
        )));
    }
    let p = oh * ow;
    let kk = params.patch_len();

    // Per-example partials, reduced below in example order so the result
    // does not depend on how many threads ran.
    let partials: Vec<(Vec<f64>, Option<Vec<f64>>)> = (0..batch)
        .into_par_iter()
        .map_init(
            || vec![0.0; kk * p],
            |col, b| {
                let dyb = dy.example(b);
                im2col(x.example(b), c, h, w, params.kernel, col);
                let mut dw = vec![0.0; co * kk];
                // dW_b = dY_b · colᵀ
                gemm(co, p, kk, dyb, (p as isize, 1), col, (1, p as isize), &mut dw, false);
                let dx = need_dx.then(|| {
                    // dcol = Wᵀ · dY_b
                    gemm(kk, co, p, &params.weight, (1, kk as isize), dyb, (p as isize, 1), col, false);
                    let mut dxb = vec![0.0; c * h * w];
                    col2im(col, c, h, w, params.kernel, &mut dxb);
                    dxb
                });
                (dw, dx)
            },
        )
        .collect();

    let mut dweight = vec![0.0; co * kk];
    let mut dx_data = need_dx.then(|| Vec::with_capacity(batch * c * h * w));
    for (dw, dx) in partials {
        for (acc, v) in dweight.iter_mut().zip(&dw) {
            *acc += v;
        }
        if let (Some(all), Some(dx)) = (dx_data.as_mut(), dx) {
            all.extend(dx);
        }
    }
    let mut dbias = vec![0.0; co];
    for b in 0..batch {
        for (o, plane) in dy.example(b).chunks(p).enumerate() {
            dbias[o] += plane.iter().sum::<f64>();
        }
    }
    let dx = match dx_data {
        Some(d) => Some(Tensor4::from_vec([batch, c, h, w], d)?),
        None => None,
    };
    Ok(ConvGrads { dx, dweight, dbias })
}

pub fn conv2d_backward(x: &Tensor4, params: &ConvParams, dy: &Tensor4) -> Result<ConvGrads> {
    conv2d_backward_with(x, params, dy, true)
}
