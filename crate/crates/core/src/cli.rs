//! Command-line front end: `stap simulate | train | evaluate | sweep | heatmap`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::dataset::{generate_dataset, Dataset, GenerateOptions, DEFAULT_EXAMPLES_PER_SHARD};
use crate::error::{Error, Result};
use crate::eval::{curve_csv, evaluate, learning_curve, CurveOptions};
use crate::nn::adam::ADAM_ALPHA;
use crate::nn::checkpoint::Checkpoint;
use crate::nn::train::{
    train_with, TrainConfig, TrainingSet, DECAY_FACTOR, DEFAULT_BATCH_SIZE, DEFAULT_DECAY_AT, DEFAULT_EPOCHS,
};
use crate::render::{slice_csv, slice_pgm};
use crate::scene::ScenarioConfig;

#[derive(Debug, Parser)]
#[command(name = "stap", version, about = "Simulate STAP heatmaps, train the localization CNN, compare with the MVDR peak")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of heatmap tensors and labels.
    Simulate(SimulateArgs),
    /// Train the CNN on a dataset's training split.
    Train(TrainArgs),
    /// Compare CNN and peak-cell errors on a dataset's test split.
    Evaluate(EvaluateArgs),
    /// Learning curve over dataset sizes and seeds.
    Sweep(SweepArgs),
    /// Dump one example's heatmap slices as PGM and CSV.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
pub struct Workers {
    /// Worker threads (default: logical cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Workers {
    fn count(&self) -> Result<usize> {
        match self.workers {
            Some(0) => Err(Error::Config("--workers must be at least 1".into())),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = DEFAULT_EXAMPLES_PER_SHARD)]
    pub examples_per_shard: usize,
    /// Replace an existing dataset in the output directory.
    #[arg(long)]
    pub overwrite: bool,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Checkpoint file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long, default_value_t = ADAM_ALPHA)]
    pub alpha: f64,
    /// Fraction of the epochs after which alpha drops tenfold (1 = never).
    #[arg(long, default_value_t = DEFAULT_DECAY_AT)]
    pub decay_at: f64,
    /// Per-epoch loss CSV (default: checkpoint path with `.loss.csv`).
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSON report file.
    #[arg(long)]
    pub report: PathBuf,
    #[command(flatten)]
    pub workers: Workers,
}

pub const DESK_N_LIST: [usize; 4] = [1000, 2000, 4000, 8000];
pub const FULL_N_LIST: [usize; 9] = [10_000, 20_000, 30_000, 40_000, 50_000, 60_000, 70_000, 80_000, 90_000];

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated ascending dataset sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "full_scale")]
    pub n_list: Option<Vec<usize>>,
    /// Full-scale sizes, 10k to 90k.
    #[arg(long)]
    pub full_scale: bool,
    /// Comma-separated seeds; each seeds both data and training.
    #[arg(long, value_delimiter = ',', required = true)]
    pub seeds: Vec<u64>,
    /// Learning-curve CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Where the per-seed datasets are generated.
    #[arg(long)]
    pub work_dir: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// Fraction of the epochs after which alpha drops tenfold (1 = never).
    #[arg(long, default_value_t = DEFAULT_DECAY_AT)]
    pub decay_at: f64,
    #[command(flatten)]
    pub workers: Workers,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub id: u64,
    /// Files are written as `<prefix>-bin<k>.pgm` and `.csv`.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario config {}: {e}", path.display())))?;
    let config: ScenarioConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    config.validate()?;
    Ok(config)
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(f)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let config = load_scenario(&args.config)?;
    let options = GenerateOptions {
        workers: args.workers.count()?,
        examples_per_shard: args.examples_per_shard,
        overwrite: args.overwrite,
    };
    let manifest = generate_dataset(&config, args.seed, args.n, &args.out, &options)?;
    println!("wrote {} examples to {}", manifest.n_examples, args.out.display());
    println!("manifest checksum: {:016x}", manifest.checksum());
    println!("mean SCNR: {:.3} dB", manifest.mean_scnr_db);
    Ok(())
}

fn train_cmd(args: &TrainArgs) -> Result<()> {
    let config = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        alpha: args.alpha,
        decay_at: args.decay_at,
    };
    config.validate()?;
    let dataset = Dataset::open(&args.dataset)?;
    println!(
        "adam alpha = {:e}, batch {}, {} epochs (alpha x{} from epoch {}), seed {}",
        config.alpha,
        config.batch_size,
        config.epochs,
        DECAY_FACTOR,
        config.decay_epoch() + 1,
        config.seed
    );
    with_pool(args.workers.count()?, || {
        let set = TrainingSet::from_dataset(&dataset)?;
        println!("training on {} examples", set.len());
        let start = Instant::now();
        let outcome = train_with(&set, &config, |epoch, loss| {
            println!("epoch {:>3}  loss {loss:.6}", epoch + 1);
        })?;
        let checkpoint = Checkpoint {
            params: outcome.params,
            normalization: dataset.normalization().clone(),
        };
        write_file(&args.out, checkpoint.to_bytes())?;
        let mut csv = String::from("epoch,loss\n");
        csv.push_str(&format!("0,{}\n", outcome.initial_loss));
        for (k, l) in outcome.loss_trace.iter().enumerate() {
            csv.push_str(&format!("{},{l}\n", k + 1));
        }
        let loss_path = args.loss_csv.clone().unwrap_or_else(|| {
            let mut p = args.out.clone().into_os_string();
            p.push(".loss.csv");
            PathBuf::from(p)
        });
        write_file(&loss_path, csv)?;
        println!("initial loss: {:.6}", outcome.initial_loss);
        println!("final loss: {:.6}", outcome.loss_trace.last().copied().unwrap_or(outcome.initial_loss));
        println!("train seconds: {:.1}", start.elapsed().as_secs_f64());
        println!("checkpoint hash: {:016x}", checkpoint.hash());
        Ok(())
    })
}

fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let dataset = Dataset::open(&args.dataset)?;
    let mut report = with_pool(args.workers.count()?, || evaluate(&checkpoint, &dataset))?;
    report.checkpoint = Some(args.checkpoint.display().to_string());
    write_file(&args.report, report.to_json())?;
    println!("Err_CNN: {:.6} m", report.err_cnn_m);
    println!("Err_MVDR: {:.6} m", report.err_mvdr_m);
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let config = load_scenario(&args.config)?;
    let n_list = match (&args.n_list, args.full_scale) {
        (Some(list), _) => list.clone(),
        (None, true) => FULL_N_LIST.to_vec(),
        (None, false) => DESK_N_LIST.to_vec(),
    };
    crate::eval::check_ascending(&n_list)?;
    let options = CurveOptions {
        workers: args.workers.count()?,
        epochs: args.epochs,
        batch_size: args.batch_size,
        decay_at: args.decay_at,
        work_dir: args.work_dir.clone(),
    };
    let points = with_pool(options.workers, || {
        learning_curve(&config, &n_list, &args.seeds, &options, |p| println!("{}", p.csv_row()))
    })?;
    write_file(&args.out, curve_csv(&points))?;
    println!("wrote {} rows to {}", points.len(), args.out.display());
    Ok(())
}

fn heatmap(args: &HeatmapArgs) -> Result<()> {
    let dataset = Dataset::open(&args.dataset)?;
    let example = dataset
        .examples
        .iter()
        .find(|e| e.id == args.id)
        .ok_or(Error::Index {
            what: "example id",
            index: args.id as usize,
            len: dataset.len(),
        })?;
    let grid = &dataset.manifest.scenario.angle_grid;
    for bin in 0..example.tensor.shape()[0] {
        let stem = format!("{}-bin{bin}", args.out_prefix.display());
        write_file(Path::new(&format!("{stem}.pgm")), slice_pgm(&example.tensor, bin)?)?;
        write_file(Path::new(&format!("{stem}.csv")), slice_csv(&example.tensor, grid, bin)?)?;
        println!("{stem}.pgm");
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Sweep(a) => sweep(a),
        Command::Heatmap(a) => heatmap(a),
    }
}

/// Parse `args`, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
