//! Acceptance suite. Runs every criterion in order and prints one
//! `PASS`/`FAIL` line each and exits non-zero if any criterion fails.
//!
//! Criteria 6 and 7 share one learning-curve run (N = 1000 and 8000, three
//! seeds) and dominate the runtime.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stap_core::beamform::{diagonal_load, mvdr_power, sample_covariance, CovarianceMatrix, HeatmapBuilder};
use stap_core::dataset::{generate_dataset, Dataset, GenerateOptions};
use stap_core::eval::{baseline_predict, learning_curve, CurveOptions, CurvePoint};
use stap_core::geometry::{cell_center, polar_to_cartesian};
use stap_core::linalg::CMatrix;
use stap_core::nn::activation::{relu_backward, relu_forward};
use stap_core::nn::batchnorm::{batchnorm_backward, batchnorm_forward_train, BatchNormParams};
use stap_core::nn::checkpoint::Checkpoint;
use stap_core::nn::conv::{conv2d_backward, conv2d_forward, ConvParams};
use stap_core::nn::dense::{dense_backward, dense_forward, DenseParams};
use stap_core::nn::loss::mse_loss;
use stap_core::nn::model::{backward, forward, forward_train, shape_trace, Mode, NetworkParams};
use stap_core::nn::pool::{maxpool2x2_backward, maxpool2x2_forward};
use stap_core::nn::train::{evaluate_mse, train, TrainConfig, TrainingSet};
use stap_core::nn::Tensor4;
use stap_core::scene::{simulate_snapshots, ScenarioConfig, TargetTruth};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn random_complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| random_complex(rng))
}

fn random_spd(rng: &mut impl Rng, l: usize) -> CovarianceMatrix {
    let y = random_matrix(rng, l, 3 * l);
    diagonal_load(&sample_covariance(&y), 1e-3)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut e_id, mut e_scale, mut e_steer, mut e_inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let identity = CovarianceMatrix {
        data: CMatrix::identity(16),
        loading: 0.0,
    };
    for _ in 0..1000 {
        let a: Vec<Complex64> = (0..16).map(|_| random_complex(&mut rng)).collect();
        e_id = e_id.max((mvdr_power(&identity, &a).unwrap() - 1.0).abs());

        let r = random_spd(&mut rng, 16);
        let p = mvdr_power(&r, &a).unwrap();
        let c = rng.random_range(0.01..100.0);
        let mut rc = r.clone();
        rc.data.scale(c);
        e_scale = e_scale.max(rel(mvdr_power(&rc, &a).unwrap(), c * p));
        let s = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let sa: Vec<Complex64> = a.iter().map(|v| v * s).collect();
        e_steer = e_steer.max(rel(mvdr_power(&r, &sa).unwrap(), p));

        let r4 = random_spd(&mut rng, 4);
        let a4: Vec<Complex64> = (0..4).map(|_| random_complex(&mut rng)).collect();
        let m = DMatrix::from_fn(4, 4, |i, j| r4.data[(i, j)]);
        let inv = m.try_inverse().unwrap();
        let av = DVector::from_vec(a4.clone());
        let denom = (av.adjoint() * &inv * &av)[(0, 0)].re;
        let oracle = av.norm_squared() / denom;
        e_inv = e_inv.max(rel(mvdr_power(&r4, &a4).unwrap(), oracle));
    }
    check(
        e_id <= 1e-12 && e_scale <= 1e-10 && e_steer <= 1e-10 && e_inv <= 1e-10,
        format!("identity {e_id:.1e}, cR {e_scale:.1e}, ca {e_steer:.1e}, 4x4 inverse {e_inv:.1e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst, mut herm) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let l = rng.random_range(2..=16);
        let k = rng.random_range(1..=120);
        let y = random_matrix(&mut rng, l, k);
        let r = sample_covariance(&y);
        for i in 0..l {
            for j in 0..l {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..k {
                    acc += y[(i, t)] * y[(j, t)].conj();
                }
                acc /= k as f64;
                let err = (r.data[(i, j)] - acc).norm() / acc.norm().max(1e-300);
                worst = worst.max(err);
                herm = herm.max((r.data[(i, j)] - r.data[(j, i)].conj()).norm());
            }
        }
    }
    check(
        worst <= 1e-12 && herm <= 1e-12,
        format!("entrywise {worst:.1e}, hermitian defect {herm:.1e}"),
    )
}

fn random_tensor(rng: &mut impl Rng, shape: [usize; 4], lo: f64, hi: f64) -> Tensor4 {
    let n = shape.iter().product();
    Tensor4::from_vec(shape, (0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Max relative error of `grad` against central differences of `f` at `x`.
fn fd_check(x: &[f64], grad: &[f64], f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let h = 1e-5 * x[i].abs().max(1e-1);
        let (mut p, mut m) = (x.to_vec(), x.to_vec());
        p[i] += h;
        m[i] -= h;
        let fd = (f(&p) - f(&m)) / (2.0 * h);
        let scale = fd.abs().max(grad[i].abs());
        if scale > 1e-8 {
            worst = worst.max((fd - grad[i]).abs() / scale);
        }
    }
    worst
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut lines = Vec::new();
    let mut ok = true;

    // conv
    let x = random_tensor(&mut rng, [2, 2, 5, 5], -1.0, 1.0);
    let mut p = ConvParams::zeros(2, 3, 3);
    p.weight.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    p.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
    let dy = random_tensor(&mut rng, conv2d_forward(&x, &p).unwrap().shape(), -1.0, 1.0);
    let g = conv2d_backward(&x, &p, &dy).unwrap();
    let ex = fd_check(x.data(), g.dx.as_ref().unwrap().data(), &|v| {
        dot(conv2d_forward(&Tensor4::from_vec(x.shape(), v.to_vec()).unwrap(), &p).unwrap().data(), dy.data())
    });
    let ew = fd_check(&p.weight, &g.dweight, &|v| {
        let mut q = p.clone();
        q.weight = v.to_vec();
        dot(conv2d_forward(&x, &q).unwrap().data(), dy.data())
    });
    let eb = fd_check(&p.bias, &g.dbias, &|v| {
        let mut q = p.clone();
        q.bias = v.to_vec();
        dot(conv2d_forward(&x, &q).unwrap().data(), dy.data())
    });
    let conv = ex.max(ew).max(eb);
    ok &= conv < 1e-5;
    lines.push(format!("conv {conv:.1e}"));

    // relu, sampled away from the kink
    let vals: Vec<f64> = (0..60)
        .map(|_| {
            let v: f64 = rng.random_range(0.01..2.0);
            if rng.random_bool(0.5) { v } else { -v }
        })
        .collect();
    let x = Tensor4::from_vec([1, 3, 4, 5], vals).unwrap();
    let dy = random_tensor(&mut rng, x.shape(), -1.0, 1.0);
    let g = relu_backward(&x, &dy);
    let relu = fd_check(x.data(), g.data(), &|v| {
        dot(relu_forward(&Tensor4::from_vec(x.shape(), v.to_vec()).unwrap()).data(), dy.data())
    });
    ok &= relu < 1e-5;
    lines.push(format!("relu {relu:.1e}"));

    // batch norm
    let x = random_tensor(&mut rng, [4, 3, 5, 5], -2.0, 3.0);
    let dy = random_tensor(&mut rng, x.shape(), -1.0, 1.0);
    let mut bn = BatchNormParams::new(3);
    bn.gamma.iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
    bn.beta.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
    let (_, cache) = batchnorm_forward_train(&x, &bn).unwrap();
    let g = batchnorm_backward(&dy, &cache, &bn).unwrap();
    let f_bn = |x: &Tensor4, bn: &BatchNormParams| dot(batchnorm_forward_train(x, bn).unwrap().0.data(), dy.data());
    let ex = fd_check(x.data(), g.dx.data(), &|v| f_bn(&Tensor4::from_vec(x.shape(), v.to_vec()).unwrap(), &bn));
    let eg = fd_check(&bn.gamma, &g.dgamma, &|v| {
        let mut q = bn.clone();
        q.gamma = v.to_vec();
        f_bn(&x, &q)
    });
    let eb = fd_check(&bn.beta, &g.dbeta, &|v| {
        let mut q = bn.clone();
        q.beta = v.to_vec();
        f_bn(&x, &q)
    });
    let bnerr = ex.max(eg).max(eb);
    ok &= bnerr < 1e-5;
    lines.push(format!("batchnorm {bnerr:.1e}"));

    // max pool on well-separated values
    let n = 2 * 3 * 6 * 5;
    let mut vals: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.random_range(0..=i));
    }
    let x = Tensor4::from_vec([2, 3, 6, 5], vals).unwrap();
    let out = maxpool2x2_forward(&x).unwrap();
    let dy = random_tensor(&mut rng, out.y.shape(), -1.0, 1.0);
    let dx = maxpool2x2_backward(x.shape(), &out, &dy).unwrap();
    let pool = fd_check(x.data(), dx.data(), &|v| {
        dot(maxpool2x2_forward(&Tensor4::from_vec(x.shape(), v.to_vec()).unwrap()).unwrap().y.data(), dy.data())
    });
    ok &= pool < 1e-5;
    lines.push(format!("maxpool {pool:.1e}"));

    // dense
    let mut d = DenseParams::zeros(7, 4);
    d.weight.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    d.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
    let x: Vec<f64> = (0..14).map(|_| rng.random_range(-1.0..1.0)).collect();
    let dy: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = dense_backward(&x, &d, &dy).unwrap();
    let ex = fd_check(&x, &g.dx, &|v| dot(&dense_forward(v, &d).unwrap(), &dy));
    let ew = fd_check(&d.weight, &g.dweight, &|v| {
        let mut q = d.clone();
        q.weight = v.to_vec();
        dot(&dense_forward(&x, &q).unwrap(), &dy)
    });
    let eb = fd_check(&d.bias, &g.dbias, &|v| {
        let mut q = d.clone();
        q.bias = v.to_vec();
        dot(&dense_forward(&x, &q).unwrap(), &dy)
    });
    let dense = ex.max(ew).max(eb);
    ok &= dense < 1e-5;
    lines.push(format!("dense {dense:.1e}"));

    // mse
    let pred: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
    let target: Vec<f64> = (0..12).map(|_| rng.random_range(-2.0..2.0)).collect();
    let (_, g) = mse_loss(&pred, &target, 3).unwrap();
    let mse = fd_check(&pred, &g, &|v| mse_loss(v, &target, 3).unwrap().0);
    ok &= mse < 1e-5;
    lines.push(format!("mse {mse:.1e}"));

    // end to end over sampled parameters
    let mut net = NetworkParams::he_init(&mut rng);
    for bn in [&mut net.bn1, &mut net.bn2] {
        bn.gamma.iter_mut().for_each(|v| *v = rng.random_range(0.5..1.5));
        bn.beta.iter_mut().for_each(|v| *v = rng.random_range(-0.2..0.2));
    }
    let x = random_tensor(&mut rng, [4, 5, 26, 21], -2.0, 2.0);
    let target: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cache = forward_train(&net, &x).unwrap();
    let (_, dout) = mse_loss(&cache.output, &target, 3).unwrap();
    let grad = backward(&net, &cache, &dout).unwrap().flatten();
    let theta = net.flatten();
    let loss = |t: &[f64]| {
        let mut q = net.clone();
        q.assign(t).unwrap();
        mse_loss(&forward(&q, &x, Mode::Train).unwrap(), &target, 3).unwrap().0
    };
    let mut e2e = 0.0f64;
    let mut sampled = 0;
    while sampled < 30 {
        let i = rng.random_range(0..theta.len());
        if grad[i].abs() < 1e-6 {
            continue;
        }
        let h = 1e-5 * theta[i].abs().max(1e-2);
        let (mut p, mut m) = (theta.clone(), theta.clone());
        p[i] += h;
        m[i] -= h;
        e2e = e2e.max(rel((loss(&p) - loss(&m)) / (2.0 * h), grad[i]));
        sampled += 1;
    }
    ok &= e2e < 1e-4;
    lines.push(format!("end-to-end {e2e:.1e} over {sampled} parameters"));
    check(ok, lines.join(", "))
}

fn criterion_4() -> Outcome {
    let config = ScenarioConfig::reference();
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&config, 4, 10, dir.path(), &GenerateOptions::default()).map_err(|e| e.to_string())?;
    let ds = Dataset::open(dir.path()).map_err(|e| e.to_string())?;
    let shapes_ok = ds.examples.iter().all(|e| e.tensor.shape() == [5, 26, 21]);
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let net = NetworkParams::he_init(&mut rng);
    let x = random_tensor(&mut rng, [1, 5, 26, 21], -1.0, 1.0);
    let trace = shape_trace(&net, &x).map_err(|e| e.to_string())?;
    let expect: Vec<Vec<usize>> = vec![
        vec![1, 32, 24, 19],
        vec![1, 32, 12, 9],
        vec![1, 64, 10, 7],
        vec![1, 64, 5, 3],
        vec![1, 960],
        vec![1, 128],
        vec![1, 3],
    ];
    check(
        shapes_ok && trace == expect,
        format!("tensor {:?}, trace {:?}", ds.examples[0].tensor.shape(), trace),
    )
}

fn criterion_5() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&ScenarioConfig::reference(), 5, 32, dir.path(), &GenerateOptions::default())
        .map_err(|e| e.to_string())?;
    let ds = Dataset::open(dir.path()).map_err(|e| e.to_string())?;
    let ids: Vec<usize> = (0..32).collect();
    let set = TrainingSet::from_examples(&ds, &ids, ds.normalization()).map_err(|e| e.to_string())?;
    let config = TrainConfig {
        epochs: 300,
        ..TrainConfig::new(5)
    };
    let out = train(&set, &config).map_err(|e| e.to_string())?;
    let mse = evaluate_mse(&out.params, &set).map_err(|e| e.to_string())?;
    check(
        mse < 1e-2,
        format!("inference-mode training MSE {mse:.2e} after 300 epochs (last epoch loss {:.2e})", out.loss_trace[299]),
    )
}

fn curve() -> Result<Vec<CurvePoint>, String> {
    let work = tempfile::tempdir().unwrap();
    let defaults = TrainConfig::new(0);
    let options = CurveOptions {
        workers: 8,
        epochs: defaults.epochs,
        batch_size: defaults.batch_size,
        decay_at: defaults.decay_at,
        work_dir: work.path().to_path_buf(),
    };
    learning_curve(&ScenarioConfig::reference(), &[1000, 8000], &[1, 2, 3], &options, |p| {
        println!(
            "    N={:<5} seed={} Err_CNN={:.2} m Err_MVDR={:.2} m train {:.0}s",
            p.n, p.seed, p.err_cnn_m, p.err_mvdr_m, p.train_seconds
        )
    })
    .map_err(|e| e.to_string())
}

fn criterion_6(points: &[CurvePoint]) -> Outcome {
    let big: Vec<&CurvePoint> = points.iter().filter(|p| p.n == 8000).collect();
    let ratios: Vec<f64> = big.iter().map(|p| p.err_cnn_m / p.err_mvdr_m).collect();
    check(
        big.len() == 3 && ratios.iter().all(|r| *r <= 0.5),
        format!("Err_CNN/Err_MVDR at N=8000: {ratios:.3?} (bar 0.5)"),
    )
}

fn criterion_7(points: &[CurvePoint]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in [1, 2, 3] {
        let small = points.iter().find(|p| p.seed == seed && p.n == 1000);
        let big = points.iter().find(|p| p.seed == seed && p.n == 8000);
        let (Some(s), Some(b)) = (small, big) else {
            return Err(format!("missing curve points for seed {seed}"));
        };
        let spread = (s.err_mvdr_m - b.err_mvdr_m).abs() / s.err_mvdr_m.min(b.err_mvdr_m);
        ok &= b.err_cnn_m < s.err_cnn_m && spread < 0.2;
        parts.push(format!(
            "seed {seed}: CNN {:.1}->{:.1} m, MVDR spread {:.1}%",
            s.err_cnn_m,
            b.err_cnn_m,
            100.0 * spread
        ));
    }
    check(ok, parts.join("; "))
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::reference();
    let mut trees = Vec::new();
    for workers in [1, 8] {
        let dir = tmp.path().join(format!("w{workers}"));
        let options = GenerateOptions {
            workers,
            examples_per_shard: 25,
            overwrite: false,
        };
        generate_dataset(&config, 8, 120, &dir, &options).map_err(|e| e.to_string())?;
        trees.push(dir_bytes(&dir));
    }
    let data_same = trees[0] == trees[1];

    let ds = Dataset::open(&tmp.path().join("w1")).map_err(|e| e.to_string())?;
    let set = TrainingSet::from_dataset(&ds).map_err(|e| e.to_string())?;
    let config = TrainConfig {
        epochs: 3,
        ..TrainConfig::new(8)
    };
    let bytes: Vec<Vec<u8>> = (0..2)
        .map(|_| {
            let out = train(&set, &config).unwrap();
            Checkpoint {
                params: out.params,
                normalization: ds.normalization().clone(),
            }
            .to_bytes()
        })
        .collect();
    let ckpt_same = bytes[0] == bytes[1];
    check(
        data_same && ckpt_same,
        format!(
            "dataset bytes identical across 1/8 workers: {data_same} ({} files); checkpoints identical: {ckpt_same}",
            trees[0].len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut config = ScenarioConfig::reference();
    config.clutter.reflectivity_db = -300.0;
    config.noise_power = 1e-12;
    let (rg, ag) = (config.range_grid.clone(), config.angle_grid.clone());
    let half_diag = {
        let c = cell_center(&rg, &ag, 2, 13, 10).unwrap();
        let lo = polar_to_cartesian(rg.center(2) - rg.dr / 2.0, ag.theta(13) - ag.dtheta / 2.0, ag.phi(10) - ag.dphi / 2.0);
        let hi = polar_to_cartesian(rg.center(2) + rg.dr / 2.0, ag.theta(13) + ag.dtheta / 2.0, ag.phi(10) + ag.dphi / 2.0);
        lo.distance(c).max(hi.distance(c))
    };
    let builder = HeatmapBuilder::mvdr(&config.array, &ag, config.loading_rel);
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst = 0.0f64;
    let mut within = 0;
    for _ in 0..100 {
        let (b, i, j) = (
            rng.random_range(0..rg.n_bins),
            rng.random_range(0..ag.n_theta),
            rng.random_range(0..ag.n_phi),
        );
        let truth = TargetTruth::from_polar(&config, rg.center(b), ag.theta(i), ag.phi(j), 80.0)
            .map_err(|e| e.to_string())?;
        let snaps = simulate_snapshots(&config, &truth, &mut rng);
        let tensor = builder.tensor(&snaps, &rg).map_err(|e| e.to_string())?;
        let pred = baseline_predict(&tensor, &rg, &ag).map_err(|e| e.to_string())?;
        let err = pred.distance(truth.position);
        worst = worst.max(err);
        if err <= half_diag {
            within += 1;
        }
    }
    check(
        within == 100,
        format!("{within}/100 within half cell diagonal {half_diag:.2} m (worst {worst:.3} m)"),
    )
}

fn run(id: usize, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {id}: PASS ({secs:.1}s) {detail}");
            true
        }
        Err(detail) => {
            println!("criterion {id}: FAIL ({secs:.1}s) {detail}");
            false
        }
    }
}

fn main() {
    // optional criterion numbers select a subset; other arguments are ignored
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |id: usize| selected.is_empty() || selected.contains(&id);
    let simple: [(usize, fn() -> Outcome); 5] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (5, criterion_5)];
    let mut results = Vec::new();
    for (id, f) in simple {
        if wanted(id) {
            results.push((id, run(id, f)));
        }
    }
    if wanted(6) || wanted(7) {
        let start = Instant::now();
        let points = curve();
        println!("learning curve: {:.0}s", start.elapsed().as_secs_f64());
        if wanted(6) {
            results.push((6, run(6, || criterion_6(points.as_ref().map_err(Clone::clone)?))));
        }
        if wanted(7) {
            results.push((7, run(7, || criterion_7(points.as_ref().map_err(Clone::clone)?))));
        }
    }
    for (id, f) in [(8, criterion_8 as fn() -> Outcome), (9, criterion_9)] {
        if wanted(id) {
            results.push((id, run(id, f)));
        }
    }
    let failed: Vec<usize> = results.iter().filter(|(_, ok)| !ok).map(|(id, _)| *id).collect();
    if failed.is_empty() {
        println!("acceptance: {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
