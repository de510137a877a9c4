use super::tensor::Tensor4;
use crate::error::{Error, Result};

/// Output of a 2×2 stride-2 max pool plus the flat input index of each maximum.
#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub y: Tensor4,
    pub argmax: Vec<usize>,
}

pub fn pool_output_hw(h: usize, w: usize) -> (usize, usize) {
    (h / 2, w / 2)
}

/// Trailing odd row/column is dropped; ties go to the first element in
/// row-major window order.
pub fn maxpool2x2_forward(x: &Tensor4) -> Result<PoolOutput> {
    let [b, c, h, w] = x.shape();
    let (oh, ow) = pool_output_hw(h, w);
    if oh == 0 || ow == 0 {
        return Err(Error::Shape(format!("max pool needs spatial dims >= 2, got {h}x{w}")));
    }
    let mut y = Tensor4::zeros([b, c, oh, ow]);
    let mut argmax = vec![0; y.data().len()];
    let xd = x.data();
    let mut o = 0;
    for plane in 0..b * c {
        let base = plane * h * w;
        for i in 0..oh {
            for j in 0..ow {
                let top = base + 2 * i * w + 2 * j;
                let mut best = top;
                for k in [top + 1, top + w, top + w + 1] {
                    if xd[k] > xd[best] {
                        best = k;
                    }
                }
                y.data_mut()[o] = xd[best];
                argmax[o] = best;
                o += 1;
            }
        }
    }
    Ok(PoolOutput { y, argmax })
}

pub fn maxpool2x2_backward(input_shape: [usize; 4], out: &PoolOutput, dy: &Tensor4) -> Result<Tensor4> {
    if dy.shape() != out.y.shape() {
        return Err(Error::Shape(format!(
            "pool gradient shape {:?} does not match output {:?}",
            dy.shape(),
            out.y.shape()
        )));
    }
    let mut dx = Tensor4::zeros(input_shape);
    for (&k, &g) in out.argmax.iter().zip(dy.data()) {
        dx.data_mut()[k] += g;
    }
    Ok(dx)
}
