//! Synthetic post-matched-filter array snapshots: one random target in
//! ground clutter and thermal noise, calibrated to a dataset-average SCNR.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    make_angle_grid, polar_to_cartesian, steering_vector, AngleBounds, AngleGrid, ArrayGeometry,
    CartesianPoint, RangeGrid,
};
use crate::linalg::CMatrix;

/// Returned by [`measure_scnr`] when the target amplitude is zero.
pub const SCNR_FLOOR_DB: f64 = -300.0;

/// Where targets may be placed. Bins are inclusive indices into the range grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRegion {
    pub first_bin: usize,
    pub last_bin: usize,
    pub theta: (f64, f64),
    pub phi: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClutterConfig {
    pub patches_per_bin: usize,
    /// Azimuth interval in degrees over which patch directions are drawn.
    pub azimuth_span: (f64, f64),
    /// Per-patch power in dB (relative to unit power).
    pub reflectivity_db: f64,
}

impl ClutterConfig {
    pub fn patch_power(&self) -> f64 {
        10f64.powf(self.reflectivity_db / 10.0)
    }
}

/// Radar and site parameters carried with a scenario for provenance.
/// None of them enters the snapshot model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarMetadata {
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub prf_hz: f64,
    pub duty_factor: f64,
    pub transmit_elements: (usize, usize),
    pub platform_speed_mps: f64,
    pub platform_heading: String,
    pub platform_lat_lon_deg: (f64, f64),
    pub area_lat_deg: (f64, f64),
    pub area_lon_deg: (f64, f64),
    pub total_range_bins: usize,
}

fn default_loading() -> f64 {
    crate::beamform::DEFAULT_LOADING_REL
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub array: ArrayGeometry,
    pub range_grid: RangeGrid,
    pub angle_grid: AngleGrid,
    /// Snapshots per range bin used for covariance estimation.
    pub snapshots: usize,
    pub target_region: TargetRegion,
    pub rcs_min_dbsm: f64,
    pub rcs_max_dbsm: f64,
    pub clutter: ClutterConfig,
    pub noise_power: f64,
    pub scnr_target_db: f64,
    /// Platform altitude above the ground plane, meters.
    pub platform_height: f64,
    /// Global target amplitude calibration constant (1 = uncalibrated).
    #[serde(default = "default_scale")]
    pub amplitude_scale: f64,
    /// Relative diagonal loading applied before MVDR evaluation.
    #[serde(default = "default_loading")]
    pub loading_rel: f64,
    pub metadata: RadarMetadata,
}

impl ScenarioConfig {
    /// The reference airborne scenario: 16-element ULA at X band, five 30 m
    /// range bins around 14.3 km slant range, 26×21 azimuth/elevation grid.
    pub fn reference() -> Self {
        let angle_grid = make_angle_grid(
            AngleBounds {
                theta: (20.0, 30.0),
                phi: (-4.1, -3.9),
            },
            0.4,
            0.01,
        )
        .expect("reference grid divides evenly");
        ScenarioConfig {
            array: ArrayGeometry {
                n_elements: 16,
                spacing: 0.015,
                wavelength: 0.03,
            },
            range_grid: RangeGrid {
                r0: 14261.0,
                dr: 30.0,
                n_bins: 5,
            },
            angle_grid,
            snapshots: 100,
            target_region: TargetRegion {
                first_bin: 0,
                last_bin: 4,
                theta: (20.0, 30.0),
                phi: (-4.1, -3.9),
            },
            rcs_min_dbsm: 75.0,
            rcs_max_dbsm: 85.0,
            clutter: ClutterConfig {
                patches_per_bin: 64,
                azimuth_span: (36.0, 66.0),
                reflectivity_db: 0.0,
            },
            noise_power: 1.0,
            scnr_target_db: -2.82,
            platform_height: 1000.0,
            amplitude_scale: 1.0,
            loading_rel: crate::beamform::DEFAULT_LOADING_REL,
            metadata: RadarMetadata {
                carrier_frequency_hz: 10.0e9,
                bandwidth_hz: 5.0e6,
                prf_hz: 1100.0,
                duty_factor: 10.0,
                transmit_elements: (48, 5),
                platform_speed_mps: 100.0,
                platform_heading: "North".into(),
                platform_lat_lon_deg: (32.4275, -117.1993),
                area_lat_deg: (32.4611, 32.6399),
                area_lon_deg: (-117.1554, -116.9433),
                total_range_bins: 680,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.range_grid.validate()?;
        self.angle_grid.validate()?;
        if self.snapshots < 2 {
            return Err(Error::Config(format!(
                "snapshot count {} must be at least 2",
                self.snapshots
            )));
        }
        if !(self.rcs_min_dbsm.is_finite() && self.rcs_max_dbsm.is_finite())
            || self.rcs_min_dbsm > self.rcs_max_dbsm
        {
            return Err(Error::Config(format!(
                "rcs bounds {}..{} dBsm are invalid",
                self.rcs_min_dbsm, self.rcs_max_dbsm
            )));
        }
        if !(self.noise_power.is_finite() && self.noise_power > 0.0) {
            return Err(Error::Config(format!("noise power {} must be > 0", self.noise_power)));
        }
        if !self.clutter.patch_power().is_finite() {
            return Err(Error::Config("clutter reflectivity is not finite".into()));
        }
        let (a0, a1) = self.clutter.azimuth_span;
        if !(a0.is_finite() && a1.is_finite()) || a1 < a0 {
            return Err(Error::Config(format!("clutter azimuth span {a0}..{a1} is invalid")));
        }
        if !(self.amplitude_scale.is_finite() && self.amplitude_scale > 0.0) {
            return Err(Error::Config(format!(
                "amplitude scale {} must be > 0",
                self.amplitude_scale
            )));
        }
        if !(self.loading_rel.is_finite() && self.loading_rel >= 0.0) {
            return Err(Error::Config(format!("loading {} must be >= 0", self.loading_rel)));
        }
        if !self.scnr_target_db.is_finite() {
            return Err(Error::Config("target SCNR must be finite".into()));
        }
        let region = &self.target_region;
        if region.first_bin > region.last_bin || region.last_bin >= self.range_grid.n_bins {
            return Err(Error::Config(format!(
                "target region bins {}..={} outside range grid of {} bins",
                region.first_bin, region.last_bin, self.range_grid.n_bins
            )));
        }
        let g = &self.angle_grid;
        let inside = |(lo, hi): (f64, f64), min: f64, max: f64| lo <= hi && lo >= min && hi <= max;
        if !inside(region.theta, g.theta_min, g.theta_max)
            || !inside(region.phi, g.phi_min, g.phi_max)
        {
            return Err(Error::Config("target region angles fall outside the angle grid".into()));
        }
        if !(self.platform_height.is_finite() && self.platform_height >= 0.0) {
            return Err(Error::Config("platform height must be >= 0".into()));
        }
        if self.range_grid.center(0) <= self.platform_height {
            return Err(Error::Config(format!(
                "first range bin center {} m does not reach the ground from {} m altitude",
                self.range_grid.center(0),
                self.platform_height
            )));
        }
        Ok(())
    }

    /// Trace of the per-bin clutter covariance, `L·Σ_p power_p`.
    pub fn clutter_power_total(&self) -> f64 {
        self.array.n_elements as f64 * self.clutter.patches_per_bin as f64 * self.clutter.patch_power()
    }

    /// Depression angle (degrees, negative) at which the bin-center range
    /// meets a flat ground plane.
    pub fn ground_elevation(&self, bin: usize) -> f64 {
        let ratio = (self.platform_height / self.range_grid.center(bin)).min(1.0);
        -ratio.asin().to_degrees()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub range_bin: usize,
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub rcs_dbsm: f64,
    pub position: CartesianPoint,
    pub amplitude: f64,
}

impl TargetTruth {
    /// Rebuild a truth record from its stored polar coordinates and RCS.
    pub fn from_polar(config: &ScenarioConfig, r: f64, theta: f64, phi: f64, rcs_dbsm: f64) -> Result<Self> {
        let range_bin = config
            .range_grid
            .bin_of(r)
            .ok_or_else(|| Error::Data(format!("target range {r} m lies outside the range grid")))?;
        Ok(TargetTruth {
            range_bin,
            r,
            theta,
            phi,
            rcs_dbsm,
            position: polar_to_cartesian(r, theta, phi),
            amplitude: rcs_to_amplitude(rcs_dbsm, r, config)?,
        })
    }
}

/// Received data for one range bin: `L` rows (elements) by `K` columns (snapshots).
#[derive(Debug, Clone, PartialEq)]
pub struct ArraySnapshot {
    pub range_bin: usize,
    pub data: CMatrix,
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn complex_gaussian(rng: &mut impl Rng, power: f64) -> Complex64 {
    let s = (0.5 * power).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draw a target uniformly over the configured region and RCS interval.
pub fn sample_target(rng: &mut impl Rng, config: &ScenarioConfig) -> Result<TargetTruth> {
    let region = &config.target_region;
    let range_bin = rng.random_range(region.first_bin..=region.last_bin);
    let near = config.range_grid.near_edge(range_bin);
    let r = uniform(rng, near, near + config.range_grid.dr);
    let theta = uniform(rng, region.theta.0, region.theta.1);
    let phi = uniform(rng, region.phi.0, region.phi.1);
    let rcs_dbsm = uniform(rng, config.rcs_min_dbsm, config.rcs_max_dbsm);
    Ok(TargetTruth {
        range_bin,
        r,
        theta,
        phi,
        rcs_dbsm,
        position: polar_to_cartesian(r, theta, phi),
        amplitude: rcs_to_amplitude(rcs_dbsm, r, config)?,
    })
}

/// Target amplitude `scale·sqrt(10^(rcs/10)) / r²` (two-way spreading).
pub fn rcs_to_amplitude(rcs_dbsm: f64, r: f64, config: &ScenarioConfig) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("target range {r} must be positive")));
    }
    Ok(config.amplitude_scale * 10f64.powf(rcs_dbsm / 20.0) / (r * r))
}

/// Synthesize one snapshot matrix per range bin.
///
/// Draw order is fixed (per bin: patch azimuths, clutter gains, noise, target
/// phases) so a seeded `rng` fully determines the output.
pub fn simulate_snapshots(
    config: &ScenarioConfig,
    truth: &TargetTruth,
    rng: &mut impl Rng,
) -> Vec<ArraySnapshot> {
    let l = config.array.n_elements;
    let k = config.snapshots;
    let n_patches = config.clutter.patches_per_bin;
    let patch_power = config.clutter.patch_power();
    let (az0, az1) = config.clutter.azimuth_span;
    let target_steering = steering_vector(&config.array, truth.theta, truth.phi);

    (0..config.range_grid.n_bins)
        .map(|bin| {
            let phi_ground = config.ground_elevation(bin);
            let patches: Vec<Vec<Complex64>> = (0..n_patches)
                .map(|_| steering_vector(&config.array, uniform(rng, az0, az1), phi_ground))
                .collect();
            let mut data = CMatrix::zeros(l, k);
            for patch in &patches {
                for col in 0..k {
                    let gain = complex_gaussian(rng, patch_power);
                    for (row, a) in patch.iter().enumerate() {
                        data[(row, col)] += gain * a;
                    }
                }
            }
            for row in 0..l {
                for col in 0..k {
                    data[(row, col)] += complex_gaussian(rng, config.noise_power);
                }
            }
            if bin == truth.range_bin {
                for col in 0..k {
                    let psi = rng.random_range(0.0..std::f64::consts::TAU);
                    let s = Complex64::from_polar(truth.amplitude, psi);
                    for (row, a) in target_steering.iter().enumerate() {
                        data[(row, col)] += s * a;
                    }
                }
            }
            ArraySnapshot {
                range_bin: bin,
                data,
            }
        })
        .collect()
}

/// Per-element signal-to-clutter-plus-noise ratio in dB at the target's bin.
pub fn measure_scnr(config: &ScenarioConfig, truth: &TargetTruth) -> f64 {
    let l = config.array.n_elements as f64;
    let signal = l * truth.amplitude * truth.amplitude;
    let interference = config.clutter_power_total() + l * config.noise_power;
    if !(signal > 0.0) {
        return SCNR_FLOOR_DB;
    }
    (10.0 * (signal / interference).log10()).max(SCNR_FLOOR_DB)
}

/// Amplitude scale that moves the mean uncalibrated SCNR of `n_probe`
/// sampled targets onto `config.scnr_target_db`.
///
/// SCNR in dB is affine in `20·log10(scale)`, so one pass suffices.
pub fn calibrate_scnr(config: &ScenarioConfig, n_probe: usize, rng: &mut impl Rng) -> Result<f64> {
    if n_probe < 100 {
        return Err(Error::Config(format!("calibration needs >= 100 probes, got {n_probe}")));
    }
    let interference =
        config.clutter_power_total() + config.array.n_elements as f64 * config.noise_power;
    if !(interference > 0.0) {
        return Err(Error::Config("clutter plus noise power is zero".into()));
    }
    let mut probe = config.clone();
    probe.amplitude_scale = 1.0;
    let mut total = 0.0;
    for _ in 0..n_probe {
        let truth = sample_target(rng, &probe)?;
        total += measure_scnr(&probe, &truth);
    }
    let mean = total / n_probe as f64;
    Ok(10f64.powf((config.scnr_target_db - mean) / 20.0))
}
