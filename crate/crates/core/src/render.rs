//! Image and table dumps of heatmap slices.

use crate::beamform::HeatmapTensor;
use crate::error::{Error, Result};
use crate::geometry::AngleGrid;

pub const PGM_MAX: u16 = 65535;

/// Map every entry to `0..=65535` on a log scale spanning the tensor's
/// minimum and maximum, so the tensor maximum becomes 65535.
pub fn log_levels(tensor: &HeatmapTensor) -> Result<Vec<u16>> {
    let logs = tensor
        .values()
        .iter()
        .map(|&v| {
            if v > 0.0 && v.is_finite() {
                Ok(v.log10())
            } else {
                Err(Error::Data(format!("cannot render non-positive power {v}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    Ok(logs
        .iter()
        .map(|&l| {
            if span > 0.0 {
                (f64::from(PGM_MAX) * (l - lo) / span).round() as u16
            } else {
                PGM_MAX
            }
        })
        .collect())
}

/// Binary 16-bit PGM of one range bin: θ down the rows, φ across.
pub fn slice_pgm(tensor: &HeatmapTensor, bin: usize) -> Result<Vec<u8>> {
    let [nb, nt, np] = tensor.shape();
    if bin >= nb {
        return Err(Error::Index {
            what: "range bin",
            index: bin,
            len: nb,
        });
    }
    let levels = log_levels(tensor)?;
    let mut out = format!("P5\n{np} {nt}\n{PGM_MAX}\n").into_bytes();
    for &p in &levels[bin * nt * np..(bin + 1) * nt * np] {
        out.extend_from_slice(&p.to_be_bytes());
    }
    Ok(out)
}

/// Linear power of one range bin as CSV with angle headers.
pub fn slice_csv(tensor: &HeatmapTensor, grid: &AngleGrid, bin: usize) -> Result<String> {
    let [nb, nt, np] = tensor.shape();
    if nt != grid.n_theta || np != grid.n_phi {
        return Err(Error::Shape(format!(
            "tensor slice {nt}x{np} does not match angle grid {}x{}",
            grid.n_theta, grid.n_phi
        )));
    }
    if bin >= nb {
        return Err(Error::Index {
            what: "range bin",
            index: bin,
            len: nb,
        });
    }
    let mut out = String::from("theta_deg");
    for j in 0..np {
        out.push_str(&format!(",{:.4}", grid.phi(j)));
    }
    out.push('\n');
    for i in 0..nt {
        out.push_str(&format!("{:.4}", grid.theta(i)));
        for j in 0..np {
            out.push_str(&format!(",{:e}", tensor.get(bin, i, j)));
        }
        out.push('\n');
    }
    Ok(out)
}
