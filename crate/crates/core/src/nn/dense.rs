use super::conv::gemm;
use crate::error::{Error, Result};

/// Fully connected layer `y = Wᵀx + b` with `W` stored `in × out` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub dx: Vec<f64>,
    pub dweight: Vec<f64>,
    pub dbias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseParams {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn batch_of(&self, x: &[f64]) -> Result<usize> {
        if self.inputs == 0 || x.len() % self.inputs != 0 {
            return Err(Error::Shape(format!(
                "dense layer expects rows of {} inputs, got {} values",
                self.inputs,
                x.len()
            )));
        }
        Ok(x.len() / self.inputs)
    }
}

/// `x` is `batch × inputs` row-major; returns `batch × outputs`.
pub fn dense_forward(x: &[f64], params: &DenseParams) -> Result<Vec<f64>> {
    let batch = params.batch_of(x)?;
    let (ni, no) = (params.inputs, params.outputs);
    let mut y: Vec<f64> = (0..batch).flat_map(|_| params.bias.iter().copied()).collect();
    gemm(batch, ni, no, x, (ni as isize, 1), &params.weight, (no as isize, 1), &mut y, true);
    Ok(y)
}

pub fn dense_backward(x: &[f64], params: &DenseParams, dy: &[f64]) -> Result<DenseGrads> {
    let batch = params.batch_of(x)?;
    let (ni, no) = (params.inputs, params.outputs);
    if dy.len() != batch * no {
        return Err(Error::Shape(format!(
            "dense gradient has {} values, expected {batch}x{no}",
            dy.len()
        )));
    }
    let mut dweight = vec![0.0; ni * no];
    gemm(ni, batch, no, x, (1, ni as isize), dy, (no as isize, 1), &mut dweight, false);
    let mut dbias = vec![0.0; no];
    for row in dy.chunks(no) {
        for (d, g) in dbias.iter_mut().zip(row) {
            *d += g;
        }
    }
    let mut dx = vec![0.0; batch * ni];
    gemm(batch, no, ni, dy, (no as isize, 1), &params.weight, (1, no as isize), &mut dx, false);
    Ok(DenseGrads { dx, dweight, dbias })
}
