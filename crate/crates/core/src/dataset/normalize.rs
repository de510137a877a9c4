//! Feature and label standardization. Statistics always come from the
//! training split.

use serde::{Deserialize, Serialize};

use crate::beamform::HeatmapTensor;
use crate::error::{Error, Result};
use crate::geometry::CartesianPoint;

pub const LOG10_STANDARDIZE: &str = "log10-standardize";

/// Scalar mean/std of `log10(power)` over every training tensor entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub transform: String,
    pub mean: f64,
    pub std: f64,
}

/// Per-axis label mean in meters and one shared scale, the RMS of the
/// per-axis standard deviations, so squared error in normalized units stays
/// proportional to squared Euclidean error in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub features: FeatureStats,
    pub labels: LabelStats,
}

/// Running count/mean/M2 that merges in a fixed order (Chan et al.).
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    pub count: f64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut m = Moments::default();
        for v in values {
            m.count += 1.0;
            let d = v - m.mean;
            m.mean += d / m.count;
            m.m2 += d * (v - m.mean);
        }
        m
    }

    pub fn merge(self, other: Moments) -> Moments {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        if self.count == 0.0 {
            0.0
        } else {
            (self.m2 / self.count).sqrt()
        }
    }
}

fn nonzero_std(s: f64) -> f64 {
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

impl FeatureStats {
    pub fn from_moments(m: Moments) -> Self {
        FeatureStats {
            transform: LOG10_STANDARDIZE.into(),
            mean: m.mean,
            std: nonzero_std(m.std()),
        }
    }
}

impl LabelStats {
    /// Zero spread on every axis falls back to std = 1.
    pub fn from_moments(axes: [Moments; 3]) -> Self {
        let var = axes.iter().map(|m| m.std().powi(2)).sum::<f64>() / 3.0;
        LabelStats {
            mean: axes.map(|m| m.mean),
            std: [nonzero_std(var.sqrt()); 3],
        }
    }
}

/// `log10` of every entry; rejects non-positive power.
pub fn log_power(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&v| {
            if v > 0.0 && v.is_finite() {
                Ok(v.log10())
            } else {
                Err(Error::Data(format!("heatmap entry {v} is not positive and finite")))
            }
        })
        .collect()
}

/// `(log10(t) − μ)/σ` elementwise.
pub fn normalize_features(tensor: &HeatmapTensor, stats: &FeatureStats) -> Result<Vec<f64>> {
    if stats.transform != LOG10_STANDARDIZE {
        return Err(Error::Config(format!("unknown feature transform {:?}", stats.transform)));
    }
    let mut out = log_power(tensor.values())?;
    for v in &mut out {
        *v = (*v - stats.mean) / stats.std;
    }
    Ok(out)
}

pub fn denormalize_features(values: &[f64], shape: [usize; 3], stats: &FeatureStats) -> Result<HeatmapTensor> {
    HeatmapTensor::new(
        shape,
        values
            .iter()
            .map(|v| 10f64.powf(v * stats.std + stats.mean))
            .collect(),
    )
}

pub fn normalize_labels(point: CartesianPoint, stats: &LabelStats) -> [f64; 3] {
    let p = point.to_array();
    std::array::from_fn(|k| (p[k] - stats.mean[k]) / stats.std[k])
}

pub fn denormalize_labels(v: [f64; 3], stats: &LabelStats) -> CartesianPoint {
    CartesianPoint::from_array(std::array::from_fn(|k| v[k] * stats.std[k] + stats.mean[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(mean: f64, std: f64) -> FeatureStats {
        FeatureStats {
            transform: LOG10_STANDARDIZE.into(),
            mean,
            std,
        }
    }

    #[test]
    fn constant_tensor_at_mean_maps_to_zero() {
        let t = HeatmapTensor::new([1, 2, 2], vec![10f64.powf(1.5); 4]).unwrap();
        let z = normalize_features(&t, &stats(1.5, 0.7)).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn feature_round_trip() {
        let vals = vec![1e-3, 0.5, 2.0, 123.0, 7e5, 1.0];
        let t = HeatmapTensor::new([1, 2, 3], vals.clone()).unwrap();
        let s = stats(0.3, 1.9);
        let back = denormalize_features(&normalize_features(&t, &s).unwrap(), [1, 2, 3], &s).unwrap();
        for (a, b) in back.values().iter().zip(&vals) {
            assert!((a - b).abs() <= 1e-10 * b);
        }
    }

    #[test]
    fn non_positive_power_is_a_data_error() {
        let t = HeatmapTensor::new([1, 1, 2], vec![1.0, 0.0]).unwrap();
        assert!(matches!(normalize_features(&t, &stats(0.0, 1.0)), Err(Error::Data(_))));
    }

    #[test]
    fn label_round_trip_and_mean() {
        let s = LabelStats {
            mean: [13000.0, 5900.0, -1000.0],
            std: [300.0, 650.0, 1.0],
        };
        assert_eq!(normalize_labels(CartesianPoint::from_array(s.mean), &s), [0.0; 3]);
        let p = CartesianPoint::new(12777.125, 6100.5, -1003.25);
        let q = denormalize_labels(normalize_labels(p, &s), &s);
        for (a, b) in q.to_array().iter().zip(p.to_array()) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
    }

    #[test]
    fn label_scale_is_shared_rms() {
        let axes = [Moments::of([1.0, 3.0]), Moments::of([2.0, 2.0]), Moments::of([0.0, 4.0])];
        let s = LabelStats::from_moments(axes);
        let rms = (5.0f64 / 3.0).sqrt();
        assert_eq!(s.mean, [2.0, 2.0, 2.0]);
        assert!(s.std.iter().all(|v| (v - rms).abs() < 1e-15));
    }

    #[test]
    fn zero_spread_labels_use_unit_std() {
        let s = LabelStats::from_moments([Moments::of([5.0, 5.0]); 3]);
        assert_eq!(s.std, [1.0; 3]);
    }

    #[test]
    fn merged_moments_match_direct() {
        let a: Vec<f64> = (0..37).map(|k| (k as f64 * 0.731).sin() * 5.0 + 2.0).collect();
        let b: Vec<f64> = (0..11).map(|k| (k as f64 * 1.3).cos() * 0.5 - 9.0).collect();
        let merged = Moments::of(a.iter().copied()).merge(Moments::of(b.iter().copied()));
        let direct = Moments::of(a.iter().chain(&b).copied());
        assert!((merged.mean - direct.mean).abs() < 1e-12);
        assert!((merged.std() - direct.std()).abs() < 1e-12);
    }
}
