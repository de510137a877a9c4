use crate::error::{Error, Result};

/// `(1/B)·Σ‖pred − target‖²` over rows of width `dim`, and its gradient.
pub fn mse_loss(pred: &[f64], target: &[f64], dim: usize) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() || dim == 0 || pred.len() % dim != 0 || pred.is_empty() {
        return Err(Error::Shape(format!(
            "loss over {} predictions and {} targets with row width {dim}",
            pred.len(),
            target.len()
        )));
    }
    let batch = (pred.len() / dim) as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / batch
        })
        .collect();
    Ok((loss / batch, grad))
}
