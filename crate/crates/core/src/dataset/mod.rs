//! Generate, persist, split and normalize datasets of heatmap tensors with
//! Cartesian target labels.
//!
//! Directory layout:
//!
//! ```text
//! <dir>/manifest.json          scenario, seeds, split, normalization, checksums
//! <dir>/shards/shard-0000.bin  fixed-stride records, see [`format`]
//! ```
//!
//! Every example is a pure function of `(scenario, master seed, id)`, so the
//! bytes on disk do not depend on the worker count.

pub mod format;
pub mod normalize;

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamform::{HeatmapBuilder, HeatmapTensor, Mvdr, TestStatistic};
use crate::error::{Error, Result};
use crate::geometry::CartesianPoint;
use crate::hash::{fnv1a64, mix_seed};
use crate::scene::{calibrate_scnr, measure_scnr, sample_target, simulate_snapshots, ScenarioConfig, TargetTruth};
use format::Record;
use normalize::{log_power, FeatureStats, LabelStats, Moments, Normalization};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SHARD_DIR: &str = "shards";
pub const FORMAT_VERSION: u32 = 1;
pub const TRAIN_FRACTION: f64 = 0.9;
pub const DEFAULT_EXAMPLES_PER_SHARD: usize = 1000;
pub const CALIBRATION_PROBES: usize = 1000;
pub const MIN_EXAMPLES: usize = 10;

const CALIBRATION_STREAM: u64 = u64::MAX;
const SPLIT_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: u64,
    pub tensor: HeatmapTensor,
    pub label: CartesianPoint,
    pub truth: TargetTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub file: String,
    pub first_id: u64,
    pub n_examples: usize,
    /// FNV-1a 64 of the shard file, lowercase hex.
    pub fnv1a64: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// Scenario with the calibrated amplitude scale filled in.
    pub scenario: ScenarioConfig,
    pub master_seed: u64,
    pub n_examples: usize,
    pub tensor_shape: [usize; 3],
    pub statistic: String,
    pub examples_per_shard: usize,
    pub shards: Vec<ShardEntry>,
    pub split: SplitSpec,
    pub normalization: Normalization,
    /// Mean per-example SCNR in dB over all generated examples.
    pub mean_scnr_db: f64,
}

impl DatasetManifest {
    pub fn tensor_len(&self) -> usize {
        self.tensor_shape.iter().product()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    /// FNV-1a 64 of the canonical manifest text; covers every shard checksum.
    pub fn checksum(&self) -> u64 {
        fnv1a64(self.to_json().as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.clone(), source })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "dataset format version {} is not supported",
                manifest.format_version
            )));
        }
        manifest.scenario.validate()?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub workers: usize,
    pub examples_per_shard: usize,
    /// Replace an existing dataset in the output directory.
    pub overwrite: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            workers: 1,
            examples_per_shard: DEFAULT_EXAMPLES_PER_SHARD,
            overwrite: false,
        }
    }
}

/// Per-example seeded generation: target draw, snapshots, heatmap tensor.
///
/// The tensor is rounded to `f32`, the precision it is stored at.
pub fn generate_example<S: TestStatistic>(
    config: &ScenarioConfig,
    builder: &HeatmapBuilder<S>,
    master_seed: u64,
    id: u64,
) -> Result<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, id));
    let truth = sample_target(&mut rng, config)?;
    let snapshots = simulate_snapshots(config, &truth, &mut rng);
    let mut tensor = builder.tensor(&snapshots, &config.range_grid)?;
    tensor.quantize_f32();
    Ok(Example {
        id,
        tensor,
        label: truth.position,
        truth,
    })
}

/// Scenario with its amplitude scale calibrated for `master_seed`.
pub fn calibrated_scenario(config: &ScenarioConfig, master_seed: u64) -> Result<ScenarioConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(master_seed, CALIBRATION_STREAM));
    let mut calibrated = config.clone();
    calibrated.amplitude_scale = calibrate_scnr(config, CALIBRATION_PROBES, &mut rng)?;
    Ok(calibrated)
}

pub fn split_seed(master_seed: u64) -> u64 {
    mix_seed(master_seed, SPLIT_STREAM)
}

fn train_count(n: usize) -> usize {
    (TRAIN_FRACTION * n as f64).round() as usize
}

/// Seeded shuffle of `0..n` into sorted train and test id lists.
pub fn split_ids(split_seed: u64, n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let mut train = ids[..train_count(n)].to_vec();
    let mut test = ids[train_count(n)..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Train/test partition recorded by a manifest for its first `n` examples.
pub fn split(manifest: &DatasetManifest, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < MIN_EXAMPLES || n > manifest.n_examples {
        return Err(Error::Config(format!(
            "cannot split {n} examples of a {}-example dataset (minimum {MIN_EXAMPLES})",
            manifest.n_examples
        )));
    }
    Ok(split_ids(manifest.split.split_seed, n))
}

fn shard_name(k: usize) -> String {
    format!("{SHARD_DIR}/shard-{k:04}.bin")
}

struct ShardOutcome {
    entry: ShardEntry,
    feature_moments: Vec<Moments>,
    labels: Vec<CartesianPoint>,
    scnr_db: Vec<f64>,
}

/// Generate `n` examples into `out_dir` with `options.workers` threads.
///
/// The manifest is written last; on failure any shard files already written
/// are removed and no manifest is left behind.
pub fn generate_dataset(
    config: &ScenarioConfig,
    master_seed: u64,
    n: usize,
    out_dir: &Path,
    options: &GenerateOptions,
) -> Result<DatasetManifest> {
    config.validate()?;
    if n < MIN_EXAMPLES {
        return Err(Error::Config(format!("dataset needs at least {MIN_EXAMPLES} examples, got {n}")));
    }
    if options.workers == 0 || options.examples_per_shard == 0 {
        return Err(Error::Config("workers and examples per shard must be positive".into()));
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if manifest_path.exists() && !options.overwrite {
        return Err(Error::Config(format!(
            "{} already holds a dataset (pass overwrite to replace it)",
            out_dir.display()
        )));
    }
    let scenario = calibrated_scenario(config, master_seed)?;
    let shard_dir = out_dir.join(SHARD_DIR);
    fs::create_dir_all(&shard_dir).map_err(|e| Error::io(&shard_dir, e))?;
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    }

    let n_shards = n.div_ceil(options.examples_per_shard);
    let result = write_shards(&scenario, master_seed, n, n_shards, out_dir, options);
    let outcomes = match result {
        Ok(o) => o,
        Err(e) => {
            for k in 0..n_shards {
                let _ = fs::remove_file(out_dir.join(shard_name(k)));
            }
            return Err(e);
        }
    };

    let seed = split_seed(master_seed);
    let (train, _) = split_ids(seed, n);
    let mut feature_moments = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut scnr_total = 0.0;
    let mut shards = Vec::with_capacity(n_shards);
    for o in outcomes {
        feature_moments.extend(o.feature_moments);
        labels.extend(o.labels);
        scnr_total += o.scnr_db.iter().sum::<f64>();
        shards.push(o.entry);
    }
    let normalization = normalization_from_parts(&feature_moments, &labels, &train);
    let tensor_shape = [
        scenario.range_grid.n_bins,
        scenario.angle_grid.n_theta,
        scenario.angle_grid.n_phi,
    ];
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        scenario,
        master_seed,
        n_examples: n,
        tensor_shape,
        statistic: Mvdr.name().into(),
        examples_per_shard: options.examples_per_shard,
        shards,
        split: SplitSpec {
            train_fraction: TRAIN_FRACTION,
            split_seed: seed,
        },
        normalization,
        mean_scnr_db: scnr_total / n as f64,
    };
    let tmp = out_dir.join(format!("{MANIFEST_FILE}.tmp"));
    fs::write(&tmp, manifest.to_json()).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

fn write_shards(
    scenario: &ScenarioConfig,
    master_seed: u64,
    n: usize,
    n_shards: usize,
    out_dir: &Path,
    options: &GenerateOptions,
) -> Result<Vec<ShardOutcome>> {
    let builder = HeatmapBuilder::mvdr(&scenario.array, &scenario.angle_grid, scenario.loading_rel);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", options.workers)))?;
    let per_shard = options.examples_per_shard;
    pool.install(|| {
        (0..n_shards)
            .into_par_iter()
            .map(|k| {
                let first = k * per_shard;
                let last = (first + per_shard).min(n);
                let examples = (first..last)
                    .into_par_iter()
                    .map(|id| generate_example(scenario, &builder, master_seed, id as u64))
                    .collect::<Result<Vec<_>>>()?;
                let mut feature_moments = Vec::with_capacity(examples.len());
                let mut labels = Vec::with_capacity(examples.len());
                let mut scnr_db = Vec::with_capacity(examples.len());
                let mut records = Vec::with_capacity(examples.len());
                for ex in examples {
                    feature_moments.push(Moments::of(log_power(ex.tensor.values())?));
                    labels.push(ex.label);
                    scnr_db.push(measure_scnr(scenario, &ex.truth));
                    records.push(to_record(&ex));
                }
                let tensor_len = records.first().map_or(0, |r| r.tensor.len());
                let bytes = format::encode_shard(&records, tensor_len)?;
                let name = shard_name(k);
                let path = out_dir.join(&name);
                let mut file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                format::write_all(&mut file, &bytes).map_err(|e| Error::io(&path, e))?;
                Ok(ShardOutcome {
                    entry: ShardEntry {
                        file: name,
                        first_id: first as u64,
                        n_examples: last - first,
                        fnv1a64: format!("{:016x}", fnv1a64(&bytes)),
                    },
                    feature_moments,
                    labels,
                    scnr_db,
                })
            })
            .collect()
    })
}

fn to_record(ex: &Example) -> Record {
    Record {
        id: ex.id,
        label: ex.label.to_array(),
        rcs_dbsm: ex.truth.rcs_dbsm,
        polar: [ex.truth.r, ex.truth.theta, ex.truth.phi],
        tensor: ex.tensor.values().iter().map(|&v| v as f32).collect(),
    }
}

fn normalization_from_parts(feature_moments: &[Moments], labels: &[CartesianPoint], train: &[usize]) -> Normalization {
    let features = train
        .iter()
        .fold(Moments::default(), |acc, &i| acc.merge(feature_moments[i]));
    let axes = std::array::from_fn(|k| Moments::of(train.iter().map(|&i| labels[i].to_array()[k])));
    Normalization {
        features: FeatureStats::from_moments(features),
        labels: LabelStats::from_moments(axes),
    }
}

/// Normalization statistics over the `train` examples only.
pub fn compute_normalization(examples: &[Example], train: &[usize]) -> Result<Normalization> {
    let moments = examples
        .iter()
        .map(|e| log_power(e.tensor.values()).map(Moments::of))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<CartesianPoint> = examples.iter().map(|e| e.label).collect();
    Ok(normalization_from_parts(&moments, &labels, train))
}

/// A dataset loaded into memory. Example ids equal their position.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: Option<PathBuf>,
    pub manifest: DatasetManifest,
    pub examples: Vec<Example>,
}

impl Dataset {
    /// Read and checksum-verify every shard.
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = DatasetManifest::read(dir)?;
        let tensor_len = manifest.tensor_len();
        let expected_shape = [
            manifest.scenario.range_grid.n_bins,
            manifest.scenario.angle_grid.n_theta,
            manifest.scenario.angle_grid.n_phi,
        ];
        if manifest.tensor_shape != expected_shape {
            return Err(Error::Shape(format!(
                "manifest tensor shape {:?} disagrees with scenario grids {expected_shape:?}",
                manifest.tensor_shape
            )));
        }
        let mut examples = Vec::with_capacity(manifest.n_examples);
        for entry in &manifest.shards {
            let path = dir.join(&entry.file);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let sum = format!("{:016x}", fnv1a64(&bytes));
            if sum != entry.fnv1a64 {
                return Err(Error::Data(format!(
                    "{} checksum {sum} does not match manifest {}",
                    path.display(),
                    entry.fnv1a64
                )));
            }
            let records = format::decode_shard(&bytes, tensor_len)?;
            if records.len() != entry.n_examples {
                return Err(Error::Data(format!(
                    "{} holds {} records, manifest says {}",
                    path.display(),
                    records.len(),
                    entry.n_examples
                )));
            }
            for rec in records {
                examples.push(from_record(&manifest, rec)?);
            }
        }
        if examples.len() != manifest.n_examples
            || examples.iter().enumerate().any(|(k, e)| e.id != k as u64)
        {
            return Err(Error::Data("example ids are not a contiguous 0..N sequence".into()));
        }
        Ok(Dataset {
            dir: Some(dir.to_path_buf()),
            manifest,
            examples,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn split(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        split(&self.manifest, self.len())
    }

    pub fn normalization(&self) -> &Normalization {
        &self.manifest.normalization
    }

    /// The first `n` examples with a fresh split and recomputed statistics.
    pub fn subset(&self, n: usize) -> Result<Dataset> {
        let (train, _) = split(&self.manifest, n)?;
        let examples = self.examples[..n].to_vec();
        let mut manifest = self.manifest.clone();
        manifest.n_examples = n;
        manifest.shards.clear();
        manifest.normalization = compute_normalization(&examples, &train)?;
        manifest.mean_scnr_db =
            examples.iter().map(|e| measure_scnr(&manifest.scenario, &e.truth)).sum::<f64>() / n as f64;
        Ok(Dataset {
            dir: None,
            manifest,
            examples,
        })
    }
}

fn from_record(manifest: &DatasetManifest, rec: Record) -> Result<Example> {
    let [r, theta, phi] = rec.polar;
    let mut truth = TargetTruth::from_polar(&manifest.scenario, r, theta, phi, rec.rcs_dbsm)?;
    let label = CartesianPoint::from_array(rec.label);
    truth.position = label;
    let tensor = HeatmapTensor::new(
        manifest.tensor_shape,
        rec.tensor.into_iter().map(f64::from).collect(),
    )?;
    Ok(Example {
        id: rec.id,
        tensor,
        label,
        truth,
    })
}
