//! Coordinate frames, range/angle grids and the array steering model.
//!
//! Platform-centred Cartesian frame: x points North, y points East, z up.
//! Azimuth θ is measured from +x toward +y, elevation φ from the horizontal
//! plane (negative below the horizon). Angles cross the API in degrees.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on "step divides span" when building an angle grid.
const GRID_DIVISIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        CartesianPoint { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        CartesianPoint::new(v[0], v[1], v[2])
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(self, other: CartesianPoint) -> f64 {
        CartesianPoint::new(self.x - other.x, self.y - other.y, self.z - other.z).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Map platform-centred polar coordinates (meters, degrees) to Cartesian.
pub fn polar_to_cartesian(r: f64, theta_deg: f64, phi_deg: f64) -> CartesianPoint {
    let (st, ct) = theta_deg.to_radians().sin_cos();
    let (sp, cp) = phi_deg.to_radians().sin_cos();
    CartesianPoint::new(r * cp * ct, r * cp * st, r * sp)
}

/// Uniform azimuth/elevation grid with inclusive endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub theta_min: f64,
    pub theta_max: f64,
    pub dtheta: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub dphi: f64,
    pub n_theta: usize,
    pub n_phi: usize,
}

/// Inclusive `[min, max]` bounds of a 2-D angular box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleBounds {
    pub theta: (f64, f64),
    pub phi: (f64, f64),
}

fn axis_count(axis: &str, min: f64, max: f64, step: f64) -> Result<usize> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) {
        return Err(Error::Config(format!("{axis} axis has non-finite bounds or step")));
    }
    if max < min {
        return Err(Error::Config(format!(
            "{axis} axis: max {max} is below min {min}"
        )));
    }
    if step <= 0.0 {
        return Err(Error::Config(format!("{axis} axis: step {step} must be positive")));
    }
    let steps = (max - min) / step;
    let rounded = steps.round();
    if (steps - rounded).abs() > GRID_DIVISIBILITY_TOL {
        return Err(Error::Config(format!(
            "{axis} axis: step {step} does not divide span {min}..{max} ({steps} steps)"
        )));
    }
    Ok(rounded as usize + 1)
}

/// Build an [`AngleGrid`]; the steps must divide each span to an integer count.
pub fn make_angle_grid(bounds: AngleBounds, dtheta: f64, dphi: f64) -> Result<AngleGrid> {
    let n_theta = axis_count("theta", bounds.theta.0, bounds.theta.1, dtheta)?;
    let n_phi = axis_count("phi", bounds.phi.0, bounds.phi.1, dphi)?;
    Ok(AngleGrid {
        theta_min: bounds.theta.0,
        theta_max: bounds.theta.1,
        dtheta,
        phi_min: bounds.phi.0,
        phi_max: bounds.phi.1,
        dphi,
        n_theta,
        n_phi,
    })
}

impl AngleGrid {
    /// Re-check the stored counts against the bounds (used after deserializing).
    pub fn validate(&self) -> Result<()> {
        let rebuilt = make_angle_grid(
            AngleBounds {
                theta: (self.theta_min, self.theta_max),
                phi: (self.phi_min, self.phi_max),
            },
            self.dtheta,
            self.dphi,
        )?;
        if rebuilt.n_theta != self.n_theta || rebuilt.n_phi != self.n_phi {
            return Err(Error::Config(format!(
                "angle grid counts ({}, {}) disagree with bounds, expected ({}, {})",
                self.n_theta, self.n_phi, rebuilt.n_theta, rebuilt.n_phi
            )));
        }
        Ok(())
    }

    pub fn theta(&self, i: usize) -> f64 {
        self.theta_min + i as f64 * self.dtheta
    }

    pub fn phi(&self, j: usize) -> f64 {
        self.phi_min + j as f64 * self.dphi
    }

    /// Nearest grid index for an azimuth, or `None` if outside the grid.
    pub fn theta_index(&self, theta: f64) -> Option<usize> {
        nearest_index(theta, self.theta_min, self.dtheta, self.n_theta)
    }

    pub fn phi_index(&self, phi: f64) -> Option<usize> {
        nearest_index(phi, self.phi_min, self.dphi, self.n_phi)
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn nearest_index(value: f64, min: f64, step: f64, n: usize) -> Option<usize> {
    let k = ((value - min) / step).round();
    if k < 0.0 || k >= n as f64 {
        None
    } else {
        Some(k as usize)
    }
}

/// Contiguous range bins of equal width; bin `b` covers `[r0 + b·dr, r0 + (b+1)·dr)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeGrid {
    pub r0: f64,
    pub dr: f64,
    pub n_bins: usize,
}

impl RangeGrid {
    pub fn new(r0: f64, dr: f64, n_bins: usize) -> Result<Self> {
        let grid = RangeGrid { r0, dr, n_bins };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0.is_finite() && self.r0 >= 0.0) {
            return Err(Error::Config(format!("range grid r0 {} must be >= 0", self.r0)));
        }
        if !(self.dr.is_finite() && self.dr > 0.0) {
            return Err(Error::Config(format!("range bin width {} must be > 0", self.dr)));
        }
        if self.n_bins == 0 {
            return Err(Error::Config("range grid needs at least one bin".into()));
        }
        Ok(())
    }

    pub fn near_edge(&self, b: usize) -> f64 {
        self.r0 + b as f64 * self.dr
    }

    pub fn center(&self, b: usize) -> f64 {
        self.r0 + (b as f64 + 0.5) * self.dr
    }

    /// Bin containing range `r`, if any.
    pub fn bin_of(&self, r: f64) -> Option<usize> {
        let k = ((r - self.r0) / self.dr).floor();
        if k < 0.0 || k >= self.n_bins as f64 {
            None
        } else {
            Some(k as usize)
        }
    }
}

/// Horizontal uniform linear receive array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_elements: usize,
    /// Element spacing in meters.
    pub spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(n_elements: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        let array = ArrayGeometry {
            n_elements,
            spacing,
            wavelength,
        };
        array.validate()?;
        Ok(array)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 {
            return Err(Error::Config("array needs at least one element".into()));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::Config(format!("element spacing {} must be > 0", self.spacing)));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::Config(format!("wavelength {} must be > 0", self.wavelength)));
        }
        Ok(())
    }

    /// Element spacing in wavelengths.
    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing / self.wavelength
    }
}

/// Ideal ULA response: element `n` is `exp(j·2π·(d/λ)·n·sinθ·cosφ)`.
pub fn steering_vector(array: &ArrayGeometry, theta_deg: f64, phi_deg: f64) -> Vec<Complex64> {
    let u = theta_deg.to_radians().sin() * phi_deg.to_radians().cos();
    let step = 2.0 * std::f64::consts::PI * array.spacing_wavelengths() * u;
    (0..array.n_elements)
        .map(|n| Complex64::cis(step * n as f64))
        .collect()
}

/// Cartesian center of cell `(b, i, j)`: bin-center range at grid angles.
pub fn cell_center(
    range_grid: &RangeGrid,
    angle_grid: &AngleGrid,
    b: usize,
    i: usize,
    j: usize,
) -> Result<CartesianPoint> {
    check_index("range bin", b, range_grid.n_bins)?;
    check_index("theta index", i, angle_grid.n_theta)?;
    check_index("phi index", j, angle_grid.n_phi)?;
    Ok(polar_to_cartesian(
        range_grid.center(b),
        angle_grid.theta(i),
        angle_grid.phi(j),
    ))
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        Err(Error::Index { what, index, len })
    } else {
        Ok(())
    }
}
