//! Localization error of the CNN against the peak-cell baseline, and the
//! learning-curve experiment.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamform::HeatmapTensor;
use crate::dataset::normalize::denormalize_labels;
use crate::dataset::{generate_dataset, Dataset, GenerateOptions};
use crate::error::{Error, Result};
use crate::geometry::{cell_center, AngleGrid, CartesianPoint, RangeGrid};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::model::INPUT_SHAPE;
use crate::nn::train::{predict, train, TrainConfig, TrainingSet, DEFAULT_BATCH_SIZE};
use crate::scene::ScenarioConfig;

/// Index of the largest entry; ties resolve to the smallest `(bin, i, j)`.
pub fn peak_cell(tensor: &HeatmapTensor) -> (usize, usize, usize) {
    let [_, nt, np] = tensor.shape();
    let mut best = 0;
    for (k, &v) in tensor.values().iter().enumerate() {
        if v > tensor.values()[best] {
            best = k;
        }
    }
    (best / (nt * np), (best / np) % nt, best % np)
}

/// Center of the peak cell.
pub fn baseline_predict(tensor: &HeatmapTensor, range_grid: &RangeGrid, angle_grid: &AngleGrid) -> Result<CartesianPoint> {
    let expect = [range_grid.n_bins, angle_grid.n_theta, angle_grid.n_phi];
    if tensor.shape() != expect {
        return Err(Error::Shape(format!(
            "tensor {:?} does not match grids {expect:?}",
            tensor.shape()
        )));
    }
    let (b, i, j) = peak_cell(tensor);
    cell_center(range_grid, angle_grid, b, i, j)
}

pub fn mean_euclidean_error(preds: &[CartesianPoint], truths: &[CartesianPoint]) -> Result<f64> {
    if preds.len() != truths.len() || preds.is_empty() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truths",
            preds.len(),
            truths.len()
        )));
    }
    let total: f64 = preds.iter().zip(truths).map(|(p, t)| p.distance(*t)).sum();
    Ok(total / preds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleResult {
    pub id: u64,
    pub truth: [f64; 3],
    pub cnn: [f64; 3],
    pub mvdr: [f64; 3],
    pub err_cnn_m: f64,
    pub err_mvdr_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_examples: usize,
    pub err_cnn_m: f64,
    pub err_mvdr_m: f64,
    pub dataset: Option<String>,
    pub dataset_checksum: String,
    pub checkpoint: Option<String>,
    pub checkpoint_hash: String,
    pub examples: Vec<ExampleResult>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Baseline predictions for the given examples, in order.
pub fn baseline_predictions(dataset: &Dataset, ids: &[usize]) -> Result<Vec<CartesianPoint>> {
    let sc = &dataset.manifest.scenario;
    ids.par_iter()
        .map(|&i| baseline_predict(&dataset.examples[i].tensor, &sc.range_grid, &sc.angle_grid))
        .collect()
}

/// Err_CNN and Err_MVDR over the dataset's test split.
pub fn evaluate(checkpoint: &Checkpoint, dataset: &Dataset) -> Result<EvalReport> {
    if dataset.manifest.tensor_shape != INPUT_SHAPE {
        return Err(Error::Shape(format!(
            "dataset tensors are {:?} but the checkpoint expects {INPUT_SHAPE:?}",
            dataset.manifest.tensor_shape
        )));
    }
    let (_, test) = dataset.split()?;
    let set = TrainingSet::from_examples(dataset, &test, &checkpoint.normalization)?;
    let raw = predict(&checkpoint.params, &set.features, DEFAULT_BATCH_SIZE)?;
    let cnn: Vec<CartesianPoint> = raw
        .chunks(3)
        .map(|v| denormalize_labels([v[0], v[1], v[2]], &checkpoint.normalization.labels))
        .collect();
    let mvdr = baseline_predictions(dataset, &test)?;
    let truths: Vec<CartesianPoint> = test.iter().map(|&i| dataset.examples[i].label).collect();
    let examples = test
        .iter()
        .zip(&truths)
        .zip(cnn.iter().zip(&mvdr))
        .map(|((&i, t), (c, m))| ExampleResult {
            id: dataset.examples[i].id,
            truth: t.to_array(),
            cnn: c.to_array(),
            mvdr: m.to_array(),
            err_cnn_m: c.distance(*t),
            err_mvdr_m: m.distance(*t),
        })
        .collect();
    Ok(EvalReport {
        n_examples: test.len(),
        err_cnn_m: mean_euclidean_error(&cnn, &truths)?,
        err_mvdr_m: mean_euclidean_error(&mvdr, &truths)?,
        dataset: dataset.dir.as_ref().map(|d| d.display().to_string()),
        dataset_checksum: format!("{:016x}", dataset.manifest.checksum()),
        checkpoint: None,
        checkpoint_hash: format!("{:016x}", checkpoint.hash()),
        examples,
    })
}

pub const CURVE_HEADER: &str = "N,err_cnn_m,err_mvdr_m,seed,train_seconds";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub err_cnn_m: f64,
    pub err_mvdr_m: f64,
    pub seed: u64,
    pub train_seconds: f64,
}

impl CurvePoint {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{},{:.3}",
            self.n, self.err_cnn_m, self.err_mvdr_m, self.seed, self.train_seconds
        )
    }
}

pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&p.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct CurveOptions {
    pub workers: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub decay_at: f64,
    /// Scratch space; one dataset per seed is generated under it.
    pub work_dir: std::path::PathBuf,
}

pub fn check_ascending(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::Config("N list is empty".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("N list {n_list:?} must be strictly ascending")));
    }
    Ok(())
}

/// For each seed, generate the largest dataset once, then train and evaluate
/// on its first `N` examples for every `N`. Rows come out seed-major.
pub fn learning_curve(
    config: &ScenarioConfig,
    n_list: &[usize],
    seeds: &[u64],
    options: &CurveOptions,
    mut on_point: impl FnMut(&CurvePoint),
) -> Result<Vec<CurvePoint>> {
    check_ascending(n_list)?;
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    let n_max = *n_list.last().expect("nonempty");
    let mut points = Vec::with_capacity(n_list.len() * seeds.len());
    for &seed in seeds {
        let dir = options.work_dir.join(format!("seed-{seed}"));
        let gen = GenerateOptions {
            workers: options.workers,
            overwrite: true,
            ..GenerateOptions::default()
        };
        generate_dataset(config, seed, n_max, &dir, &gen)?;
        let full = Dataset::open(&dir)?;
        for &n in n_list {
            let ds = if n == n_max { full.clone() } else { full.subset(n)? };
            let point = curve_point(&ds, seed, options)?;
            on_point(&point);
            points.push(point);
        }
    }
    Ok(points)
}

/// Train on the dataset's training split with `seed` and evaluate on its test split.
pub fn curve_point(dataset: &Dataset, seed: u64, options: &CurveOptions) -> Result<CurvePoint> {
    let set = TrainingSet::from_dataset(dataset)?;
    let config = TrainConfig {
        epochs: options.epochs,
        batch_size: options.batch_size,
        decay_at: options.decay_at,
        ..TrainConfig::new(seed)
    };
    let start = Instant::now();
    let outcome = train(&set, &config)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let ck = Checkpoint {
        params: outcome.params,
        normalization: dataset.normalization().clone(),
    };
    let report = evaluate(&ck, dataset)?;
    Ok(CurvePoint {
        n: dataset.len(),
        err_cnn_m: report.err_cnn_m,
        err_mvdr_m: report.err_mvdr_m,
        seed,
        train_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_angle_grid, polar_to_cartesian, AngleBounds};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_maximum() {
        let mut v = vec![0.5; 5 * 26 * 21];
        v[2 * 546 + 13 * 21 + 10] = 9.0;
        let t = HeatmapTensor::new([5, 26, 21], v).unwrap();
        assert_eq!(peak_cell(&t), (2, 13, 10));
    }

    #[test]
    fn constant_tensor_breaks_ties_low() {
        let t = HeatmapTensor::new([5, 26, 21], vec![1.0; 5 * 26 * 21]).unwrap();
        assert_eq!(peak_cell(&t), (0, 0, 0));
        let mut v = vec![0.0; 5 * 26 * 21];
        v[3 * 546 + 2] = 4.0;
        v[1 * 546 + 7 * 21] = 4.0;
        let t = HeatmapTensor::new([5, 26, 21], v).unwrap();
        assert_eq!(peak_cell(&t), (1, 7, 0));
    }

    #[test]
    fn scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v: Vec<f64> = (0..60).map(|_| rng.random_range(0.1..10.0)).collect();
        let a = HeatmapTensor::new([3, 4, 5], v.clone()).unwrap();
        let b = HeatmapTensor::new([3, 4, 5], v.iter().map(|x| x * 37.5).collect()).unwrap();
        assert_eq!(peak_cell(&a), peak_cell(&b));
    }

    #[test]
    fn degenerate_grid_prediction_is_the_cell_center() {
        let rg = RangeGrid::new(1000.0, 30.0, 1).unwrap();
        let ag = make_angle_grid(
            AngleBounds {
                theta: (10.0, 10.0),
                phi: (-2.0, -2.0),
            },
            0.4,
            0.01,
        )
        .unwrap();
        let t = HeatmapTensor::new([1, 1, 1], vec![3.0]).unwrap();
        let p = baseline_predict(&t, &rg, &ag).unwrap();
        assert_eq!(p, polar_to_cartesian(rg.center(0), 10.0, -2.0));
        let wrong = HeatmapTensor::new([1, 1, 2], vec![3.0, 1.0]).unwrap();
        assert!(matches!(baseline_predict(&wrong, &rg, &ag), Err(Error::Shape(_))));
    }

    #[test]
    fn error_metric() {
        let a = CartesianPoint::new(1.0, 2.0, 3.0);
        assert_eq!(mean_euclidean_error(&[a], &[a]).unwrap(), 0.0);
        let b = CartesianPoint::new(4.0, 6.0, 3.0);
        assert_eq!(mean_euclidean_error(&[a], &[b]).unwrap(), 5.0);
        assert!(matches!(mean_euclidean_error(&[a, b], &[a]), Err(Error::Shape(_))));
    }

    #[test]
    fn error_metric_matches_loop_and_ignores_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut pt = || CartesianPoint::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let preds: Vec<CartesianPoint> = (0..100).map(|_| pt()).collect();
        let truths: Vec<CartesianPoint> = (0..100).map(|_| pt()).collect();
        let mut acc = 0.0;
        for k in 0..100 {
            let (p, t) = (preds[k].to_array(), truths[k].to_array());
            acc += ((p[0] - t[0]).powi(2) + (p[1] - t[1]).powi(2) + (p[2] - t[2]).powi(2)).sqrt();
        }
        let e = mean_euclidean_error(&preds, &truths).unwrap();
        assert!((e - acc / 100.0).abs() <= 1e-12 * e);
        let (rp, rt): (Vec<_>, Vec<_>) = preds.iter().zip(&truths).rev().map(|(a, b)| (*a, *b)).unzip();
        assert!((mean_euclidean_error(&rp, &rt).unwrap() - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn n_list_must_ascend() {
        assert!(check_ascending(&[1000, 2000, 8000]).is_ok());
        assert!(matches!(check_ascending(&[2000, 1000]), Err(Error::Config(_))));
        assert!(matches!(check_ascending(&[1000, 1000]), Err(Error::Config(_))));
        assert!(check_ascending(&[]).is_err());
    }

    #[test]
    fn csv_schema() {
        let p = CurvePoint {
            n: 1000,
            err_cnn_m: 12.5,
            err_mvdr_m: 40.25,
            seed: 3,
            train_seconds: 9.0,
        };
        let csv = curve_csv(&[p.clone(), p]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CURVE_HEADER);
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
