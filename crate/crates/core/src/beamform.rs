//! Sample covariance estimation and MVDR output-power heatmaps.
//!
//! For each range bin the covariance is estimated, loaded, and factored
//! once; every grid direction then costs a single triangular solve:
//!
//! ```text
//! P(θ, φ) = aᴴa / aᴴR⁻¹a,   aᴴR⁻¹a = ‖L⁻¹a‖²  with  R = L·Lᴴ
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{steering_vector, AngleGrid, ArrayGeometry, RangeGrid};
use crate::linalg::{CMatrix, HermitianCholesky};
use crate::scene::ArraySnapshot;

/// Default relative diagonal loading, as a fraction of `trace(R)/L`.
pub const DEFAULT_LOADING_REL: f64 = 1e-6;

/// Hermitian covariance estimate plus the absolute loading already applied.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub data: CMatrix,
    pub loading: f64,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.data.rows()
    }
}

/// `R = (1/K)·Y·Yᴴ` for an `L×K` snapshot matrix.
pub fn sample_covariance(y: &CMatrix) -> CovarianceMatrix {
    let l = y.rows();
    let k = y.cols().max(1) as f64;
    let mut r = CMatrix::zeros(l, l);
    for i in 0..l {
        let yi = y.row(i);
        for j in 0..=i {
            let yj = y.row(j);
            let s: Complex64 = yi.iter().zip(yj).map(|(a, b)| a * b.conj()).sum();
            let v = s / k;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
        r[(i, i)].im = 0.0;
    }
    CovarianceMatrix {
        data: r,
        loading: 0.0,
    }
}

/// Add `ε·I` with `ε = epsilon_rel·trace(R)/L`.
pub fn diagonal_load(cov: &CovarianceMatrix, epsilon_rel: f64) -> CovarianceMatrix {
    let mut out = cov.clone();
    let l = cov.dim();
    if epsilon_rel == 0.0 || l == 0 {
        return out;
    }
    let eps = epsilon_rel * cov.data.trace().re / l as f64;
    for i in 0..l {
        out.data[(i, i)].re += eps;
    }
    out.loading += eps;
    out
}

/// Covariance factored once for repeated quadratic-form evaluation.
#[derive(Debug, Clone)]
pub struct FactoredCovariance {
    chol: HermitianCholesky,
}

impl FactoredCovariance {
    pub fn new(cov: &CovarianceMatrix) -> Result<Self> {
        Ok(FactoredCovariance {
            chol: HermitianCholesky::factor(&cov.data)?,
        })
    }

    /// MVDR output power toward `a`; `scratch` needs `L` entries.
    pub fn mvdr_power(&self, a: &[Complex64], scratch: &mut [Complex64]) -> f64 {
        let gain: f64 = a.iter().map(|v| v.norm_sqr()).sum();
        (gain / self.chol.inverse_quadratic_form(a, scratch)).abs()
    }
}

/// `|aᴴa / aᴴR⁻¹a|` for one direction. Use [`FactoredCovariance`] for sweeps.
pub fn mvdr_power(cov: &CovarianceMatrix, a: &[Complex64]) -> Result<f64> {
    if a.len() != cov.dim() {
        return Err(Error::Shape(format!(
            "steering vector of length {} for a {}x{} covariance",
            a.len(),
            cov.dim(),
            cov.dim()
        )));
    }
    if a.iter().all(|v| v.norm_sqr() == 0.0) {
        return Err(Error::Domain("steering vector is zero".into()));
    }
    let f = FactoredCovariance::new(cov)?;
    let mut scratch = vec![Complex64::new(0.0, 0.0); a.len()];
    Ok(f.mvdr_power(a, &mut scratch))
}

/// Steering vectors for every `(θ_i, φ_j)` of a grid, θ-major.
#[derive(Debug, Clone)]
pub struct SteeringTable {
    n_theta: usize,
    n_phi: usize,
    n_elements: usize,
    vectors: Vec<Complex64>,
}

impl SteeringTable {
    pub fn new(array: &ArrayGeometry, grid: &AngleGrid) -> Self {
        let mut vectors = Vec::with_capacity(grid.len() * array.n_elements);
        for i in 0..grid.n_theta {
            for j in 0..grid.n_phi {
                vectors.extend(steering_vector(array, grid.theta(i), grid.phi(j)));
            }
        }
        SteeringTable {
            n_theta: grid.n_theta,
            n_phi: grid.n_phi,
            n_elements: array.n_elements,
            vectors,
        }
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_theta, self.n_phi)
    }

    pub fn get(&self, i: usize, j: usize) -> &[Complex64] {
        let start = (i * self.n_phi + j) * self.n_elements;
        &self.vectors[start..start + self.n_elements]
    }
}

/// A beamformer test statistic swept over a steering table.
///
/// Only MVDR output power ships; the trait keeps heatmap assembly agnostic
/// of which statistic fills it.
pub trait TestStatistic: Send + Sync {
    fn name(&self) -> &'static str;

    /// Values for every table entry, θ-major. Errors carry the failing cell.
    fn sweep(&self, cov: &CovarianceMatrix, table: &SteeringTable) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Mvdr;

impl TestStatistic for Mvdr {
    fn name(&self) -> &'static str {
        "mvdr-power"
    }

    fn sweep(&self, cov: &CovarianceMatrix, table: &SteeringTable) -> Result<Vec<f64>> {
        if cov.dim() != table.n_elements() {
            return Err(Error::Shape(format!(
                "{}-element steering table for a {}x{} covariance",
                table.n_elements(),
                cov.dim(),
                cov.dim()
            )));
        }
        let factored = FactoredCovariance::new(cov)?;
        let (n_theta, n_phi) = table.shape();
        let mut scratch = vec![Complex64::new(0.0, 0.0); cov.dim()];
        let mut out = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            for j in 0..n_phi {
                let p = factored.mvdr_power(table.get(i, j), &mut scratch);
                if !(p.is_finite() && p > 0.0) {
                    return Err(Error::Factorization {
                        bin: None,
                        cell: Some((i, j)),
                        reason: format!("output power {p:e} is not positive and finite"),
                    });
                }
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// Stacked beamformer output over (range bin, θ, φ), linear power, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTensor {
    shape: [usize; 3],
    values: Vec<f64>,
}

impl HeatmapTensor {
    pub fn new(shape: [usize; 3], values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.iter().product::<usize>() {
            return Err(Error::Shape(format!(
                "{} values for heatmap shape {shape:?}",
                values.len()
            )));
        }
        Ok(HeatmapTensor { shape, values })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, b: usize, i: usize, j: usize) -> f64 {
        self.values[(b * self.shape[1] + i) * self.shape[2] + j]
    }

    pub fn slice(&self, b: usize) -> &[f64] {
        let n = self.shape[1] * self.shape[2];
        &self.values[b * n..(b + 1) * n]
    }

    /// Round every entry through `f32`, the on-disk precision.
    pub fn quantize_f32(&mut self) {
        for v in &mut self.values {
            *v = f64::from(*v as f32);
        }
    }
}

/// Reusable heatmap machinery for one array/grid pair.
pub struct HeatmapBuilder<S = Mvdr> {
    table: SteeringTable,
    loading_rel: f64,
    statistic: S,
}

impl HeatmapBuilder<Mvdr> {
    pub fn mvdr(array: &ArrayGeometry, grid: &AngleGrid, loading_rel: f64) -> Self {
        HeatmapBuilder::with_statistic(array, grid, loading_rel, Mvdr)
    }
}

impl<S: TestStatistic> HeatmapBuilder<S> {
    pub fn with_statistic(array: &ArrayGeometry, grid: &AngleGrid, loading_rel: f64, statistic: S) -> Self {
        HeatmapBuilder {
            table: SteeringTable::new(array, grid),
            loading_rel,
            statistic,
        }
    }

    pub fn table(&self) -> &SteeringTable {
        &self.table
    }

    pub fn slice(&self, y: &CMatrix) -> Result<Vec<f64>> {
        if y.rows() != self.table.n_elements() {
            return Err(Error::Shape(format!(
                "snapshot has {} rows, array has {} elements",
                y.rows(),
                self.table.n_elements()
            )));
        }
        let cov = diagonal_load(&sample_covariance(y), self.loading_rel);
        self.statistic.sweep(&cov, &self.table)
    }

    /// Stack one slice per snapshot, in input order.
    pub fn tensor(&self, snapshots: &[ArraySnapshot], range_grid: &RangeGrid) -> Result<HeatmapTensor> {
        if snapshots.len() != range_grid.n_bins {
            return Err(Error::Shape(format!(
                "{} snapshots for {} range bins",
                snapshots.len(),
                range_grid.n_bins
            )));
        }
        let (n_theta, n_phi) = self.table.shape();
        let mut values = Vec::with_capacity(snapshots.len() * n_theta * n_phi);
        for s in snapshots {
            let slice = self.slice(&s.data).map_err(|e| match e {
                Error::Factorization { cell, reason, .. } => Error::Factorization {
                    bin: Some(s.range_bin),
                    cell,
                    reason,
                },
                other => other,
            })?;
            values.extend(slice);
        }
        HeatmapTensor::new([snapshots.len(), n_theta, n_phi], values)
    }
}

/// MVDR slice for one bin with default loading, `n_theta × n_phi`, θ-major.
pub fn heatmap_slice(y: &CMatrix, grid: &AngleGrid, array: &ArrayGeometry) -> Result<Vec<f64>> {
    HeatmapBuilder::mvdr(array, grid, DEFAULT_LOADING_REL).slice(y)
}

/// Stack per-bin MVDR slices into a tensor (bin-major, input order).
pub fn heatmap_tensor(
    snapshots: &[ArraySnapshot],
    range_grid: &RangeGrid,
    angle_grid: &AngleGrid,
    array: &ArrayGeometry,
) -> Result<HeatmapTensor> {
    HeatmapBuilder::mvdr(array, angle_grid, DEFAULT_LOADING_REL).tensor(snapshots, range_grid)
}
