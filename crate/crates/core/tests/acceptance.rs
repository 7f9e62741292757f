//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any fails. Positional arguments filter criteria by substring.
//!
//! Tolerances are pinned in the constants below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::{arr1, arr2, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unproject::classifiers::Ensemble;
use unproject::data::{
    generate_blobs, generate_sphere, normalize, split_indices, Dataset, SplitSpec,
};
use unproject::densemaps::{
    agreement_map, gradient_map, make_grid, read_ppm_header, roundtrip_map, validation_map,
    write_ppm, ConvexHull, PixelGrid, RgbMap,
};
use unproject::metrics::{self, timing_curve};
use unproject::model::{default_config, fit, grid_search, GridSearchSpec, ModelMetadata, NNInvModel};
use unproject::nn::{gradient_check, LayerSpec, Network, NetworkShape, ShapeKind, TrainConfig};
use unproject::projection::{pca_embed, pca_fit, Embedding, Extent, PcaModel, ProjectionSource};
use unproject::InverseProjection;

const BLOBS_MSE_MAX: f64 = 0.01;
const BLOBS_MAE_MAX: f64 = 0.05;
const CONVERGENCE_EPOCHS_MAX: usize = 400;
const GRADIENT_TOL: f64 = 1e-9;
const ROUNDTRIP_STUB_MAX: f64 = 0.02;
const ROUNDTRIP_TRAINED_MAX: f64 = 0.1;
const AGREEMENT_SATURATED_MIN: f64 = 0.95;
const TIMING_RATIO: (f64, f64) = (1.5, 3.0);
const SINGLE_POINT_MAX: Duration = Duration::from_millis(10);
const GRID_BEST_MAE_MAX: f64 = 0.08;
const SPHERE_CENTER_RIM_MIN: f64 = 1.5;
const GRADIENT_CHECK_MAX: f64 = 1e-4;
const PCA_EXACT_TOL: f64 = 1e-9;
const METRIC_ORACLE_TOL: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Verdict;

fn main() {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let checks: [(&str, Check); 9] = [
        ("blobs_reconstruction", blobs_reconstruction),
        ("convergence_budget", convergence_budget),
        ("gradient_map_oracle", gradient_map_oracle),
        ("roundtrip_map_sanity", roundtrip_map_sanity),
        ("agreement_map_oracle", agreement_map_oracle),
        ("scaling_linearity", scaling_linearity),
        ("grid_search_smoke", grid_search_smoke),
        ("sphere_center_error", sphere_center_error),
        ("property_suites", property_suites),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} {name}: {} [{:.1}s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

/// Normalized Blobs with a PCA embedding fitted on the normalized values.
fn blobs_with_pca(n: usize, d: usize, k: usize, seed: u64) -> (Dataset, Embedding) {
    let ds = normalize(&generate_blobs(n, d, k, 1.0, seed).unwrap());
    let (_, emb) = pca_embed(&ds).unwrap();
    (ds, emb)
}

fn split_pairs(
    ds: &Dataset,
    emb: &Embedding,
    seed: u64,
) -> ((Dataset, Embedding), (Dataset, Embedding)) {
    let (tr, te) = split_indices(ds.len(), SplitSpec { train_fraction: 0.75, seed }).unwrap();
    (
        (ds.select(&tr), emb.select(&tr).unwrap()),
        (ds.select(&te), emb.select(&te).unwrap()),
    )
}

fn blobs_reconstruction() -> Verdict {
    let (ds, emb) = blobs_with_pca(5000, 50, 5, 11);
    let ((tr, tr_emb), (te, te_emb)) = split_pairs(&ds, &emb, 11);
    let mut cfg = default_config(50);
    cfg.seed = 11;
    let model = fit(&tr, &tr_emb, &cfg).unwrap();
    let r = metrics::evaluate(&model, &te, &te_emb).unwrap();
    let epochs = model.metadata.report.as_ref().map_or(0, |r| r.epochs_run);
    verdict(
        r.mse < BLOBS_MSE_MAX && r.mae < BLOBS_MAE_MAX,
        format!(
            "test mse {:.5} (< {BLOBS_MSE_MAX}), mae {:.5} (< {BLOBS_MAE_MAX}), |x|^2 mean {:.4}, {epochs} epochs",
            r.mse, r.mae, r.mse_norm
        ),
    )
}

fn convergence_budget() -> Verdict {
    let (ds, emb) = blobs_with_pca(5000, 50, 5, 12);
    let ((tr, tr_emb), _) = split_pairs(&ds, &emb, 12);
    let idx: Vec<usize> = (0..500).collect();
    let mut cfg = default_config(50);
    cfg.seed = 12;
    let model = fit(&tr.select(&idx), &tr_emb.select(&idx).unwrap(), &cfg).unwrap();
    let report = model.metadata.report.unwrap();
    verdict(
        report.epochs_run <= CONVERGENCE_EPOCHS_MAX,
        format!(
            "stopped after {} epochs (<= {CONVERGENCE_EPOCHS_MAX}), best epoch {}, val mae {:.4}",
            report.epochs_run, report.best_epoch, report.best_val_mae
        ),
    )
}

struct Affine {
    a: Array2<f64>,
    c: Array1<f64>,
}

impl InverseProjection for Affine {
    fn output_dim(&self) -> usize {
        self.c.len()
    }

    fn infer_batch(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        points.dot(&self.a.t()) + &self.c
    }
}

struct Quadratic;

impl InverseProjection for Quadratic {
    fn output_dim(&self) -> usize {
        2
    }

    fn infer_batch(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        points.mapv(|v| v * v)
    }
}

fn gradient_map_oracle() -> Verdict {
    let grid = PixelGrid::new(400, Extent::new(-1.5, 2.5, -0.75, 1.25)).unwrap();
    let affine = Affine {
        a: arr2(&[[1.0, -2.0], [0.5, 3.0], [-4.0, 0.25]]),
        c: arr1(&[0.1, -0.7, 2.0]),
    };
    let col = |k: usize| affine.a.column(k).mapv(|v| v * v).sum();
    let expected = (col(0) + col(1)).sqrt();
    let g = gradient_map(&affine, &grid);
    let affine_err = g.values.iter().map(|v| (v - expected).abs()).fold(0.0, f64::max);

    let q = gradient_map(&Quadratic, &grid);
    let mut quad_err: f64 = 0.0;
    for j in 0..400 {
        for i in 0..400 {
            let [x, y] = grid.center(i as isize, j as isize);
            let exact = (4.0 * x * x + 4.0 * y * y).sqrt();
            quad_err = quad_err.max((q.get(i, j) - exact).abs());
        }
    }
    verdict(
        affine_err <= GRADIENT_TOL && quad_err <= GRADIENT_TOL,
        format!("max |error| affine {affine_err:.2e}, quadratic {quad_err:.2e} (<= {GRADIENT_TOL:e}) at R=400"),
    )
}

/// PCA's own reconstruction as an inverse projection.
struct PcaInverse<'a>(&'a PcaModel);

impl InverseProjection for PcaInverse<'_> {
    fn output_dim(&self) -> usize {
        self.0.dim()
    }

    fn infer_batch(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        self.0.inverse(points).unwrap()
    }
}

/// Points on a tilted plane in 3-D, normalized to the unit cube.
fn planar_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Array2::from_shape_fn((n, 3), |_| 0.0);
    let mut values = values;
    for mut row in values.rows_mut() {
        let u: f64 = rng.random_range(-1.0..1.0);
        let v: f64 = rng.random_range(-1.0..1.0);
        row[0] = 2.0 + u + 0.3 * v;
        row[1] = -1.0 + 0.5 * u - v;
        row[2] = 0.7 * u + 0.2 * v;
    }
    normalize(&Dataset::new(values, None).unwrap())
}

fn hull_mean_luminance<B: InverseProjection>(
    b: &B,
    pca: &PcaModel,
    emb: &Embedding,
    grid: &PixelGrid,
) -> (f64, usize) {
    let map = roundtrip_map(b, pca, grid);
    let hull = ConvexHull::of_points(emb.coords.view());
    let r = grid.resolution();
    let inside: Vec<usize> = (0..r * r)
        .filter(|&k| {
            let [x, y] = grid.center((k % r) as isize, (k / r) as isize);
            hull.contains(x, y)
        })
        .collect();
    (map.mean_luminance(inside.iter().copied()), inside.len())
}

fn roundtrip_map_sanity() -> Verdict {
    let ds = planar_dataset(3000, 21);
    let (pca, emb) = pca_embed(&ds).unwrap();
    let grid = make_grid(&emb, 200, 0.05).unwrap();
    let (stub, n_in) = hull_mean_luminance(&PcaInverse(&pca), &pca, &emb, &grid);

    let mut cfg = default_config(3);
    cfg.seed = 21;
    let model = fit(&ds, &emb, &cfg).unwrap();
    let (trained, _) = hull_mean_luminance(&model, &pca, &emb, &grid);
    verdict(
        stub <= ROUNDTRIP_STUB_MAX && trained <= ROUNDTRIP_TRAINED_MAX,
        format!(
            "mean in-hull luminance: analytic {stub:.2e} (<= {ROUNDTRIP_STUB_MAX}), trained {trained:.4} (<= {ROUNDTRIP_TRAINED_MAX}) over {n_in} pixels"
        ),
    )
}

/// Expected agreement color from the closed form of HSL at hue 0 or 240.
fn oracle_color(v: usize, m: usize) -> [u8; 3] {
    let a = (2.0 * v as f64 / m as f64 - 1.0).abs();
    let l = 1.0 - 0.5 * a;
    let c = (1.0 - (2.0 * l - 1.0).abs()) * a;
    let hi = ((l + c / 2.0) * 255.0).round() as u8;
    let lo = ((l - c / 2.0) * 255.0).round() as u8;
    if 2 * v == m {
        [255, 255, 255]
    } else if 2 * v > m {
        [lo, lo, hi]
    } else {
        [hi, lo, lo]
    }
}

fn agreement_map_oracle() -> Verdict {
    let raw = generate_blobs(1000, 10, 2, 1.0, 31).unwrap();
    let ds = normalize(&raw);
    let labels = ds.labels.clone().unwrap();
    let (_, emb) = pca_embed(&ds).unwrap();
    let mut cfg = default_config(10);
    cfg.seed = 31;
    let model = fit(&ds, &emb, &cfg).unwrap();
    let ensemble = Ensemble::fit_default(ds.values.view(), &labels).unwrap();
    let m = ensemble.len();

    let grid = make_grid(&emb, 100, 0.05).unwrap();
    let map = agreement_map(&model, &ensemble, &grid).unwrap();
    let r = grid.resolution();
    let (mut core, mut saturated) = (0usize, 0usize);
    for class in 0..2u32 {
        let pts: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
        let sub = emb.coords.select(Axis(0), &pts);
        let centroid = sub.mean_axis(Axis(0)).unwrap();
        let sigma = ((&sub - &centroid).mapv(|v| v * v).sum() / (2 * pts.len()) as f64).sqrt();
        for k in 0..r * r {
            let [x, y] = grid.center((k % r) as isize, (k / r) as isize);
            if (x - centroid[0]).hypot(y - centroid[1]) <= sigma {
                core += 1;
                if map.votes[k] == 0 || map.votes[k] == m {
                    saturated += 1;
                }
            }
        }
    }
    let frac = saturated as f64 / core.max(1) as f64;

    let small = make_grid(&emb, 16, 0.05).unwrap();
    let small_map = agreement_map(&model, &ensemble, &small).unwrap();
    let first = ensemble.classes()[0];
    let mut mismatches = 0;
    for j in 0..16 {
        for i in 0..16 {
            let [x, y] = small.center(i, j);
            let inst = Array1::from(model.infer_point(x, y));
            let v = ensemble
                .members()
                .iter()
                .filter(|c| c.predict_one(inst.view()) == first)
                .count();
            if small_map.rgb.get(i as usize, j as usize) != oracle_color(v, m) {
                mismatches += 1;
            }
        }
    }
    verdict(
        core > 0 && frac >= AGREEMENT_SATURATED_MIN && mismatches == 0,
        format!(
            "{saturated}/{core} core pixels unanimous ({:.1}% >= {:.0}%), {mismatches} brute-force mismatches on 16x16",
            100.0 * frac,
            100.0 * AGREEMENT_SATURATED_MIN
        ),
    )
}

fn random_model(d: usize, shape: NetworkShape, seed: u64) -> NNInvModel {
    let cfg = TrainConfig::for_shape(shape, d).unwrap();
    let net = Network::new(2, &cfg.layers, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    NNInvModel::new(
        net,
        Extent::new(0.0, 1.0, 0.0, 1.0),
        vec![0.0; d],
        vec![1.0; d],
        ModelMetadata::default(),
    )
    .unwrap()
}

fn scaling_linearity() -> Verdict {
    let model = random_model(50, NetworkShape::new(ShapeKind::Straight, 960), 41);
    let curve = timing_curve(&model, &model.input_extent, &[10_000, 20_000, 40_000], 5, 41).unwrap();
    let ratios: Vec<f64> = curve.windows(2).map(|w| w[1].seconds / w[0].seconds).collect();
    let linear = ratios
        .iter()
        .all(|r| (TIMING_RATIO.0..=TIMING_RATIO.1).contains(r));

    let big = random_model(784, NetworkShape::new(ShapeKind::Straight, 1920), 42);
    let mut times: Vec<Duration> = (0..21)
        .map(|k| {
            let t = Instant::now();
            std::hint::black_box(big.infer_point(k as f64 / 20.0, 0.5));
            t.elapsed()
        })
        .collect();
    times.sort();
    let single = times[times.len() / 2];
    verdict(
        linear && single <= SINGLE_POINT_MAX,
        format!(
            "ratios {:.2}, {:.2} (in [{}, {}]); single point d=784 nu=1920 median {:.3} ms (<= {} ms)",
            ratios[0],
            ratios[1],
            TIMING_RATIO.0,
            TIMING_RATIO.1,
            single.as_secs_f64() * 1e3,
            SINGLE_POINT_MAX.as_millis()
        ),
    )
}

fn grid_search_smoke() -> Verdict {
    let (ds, emb) = blobs_with_pca(2000, 50, 5, 51);
    let spec = GridSearchSpec {
        shapes: [ShapeKind::Straight, ShapeKind::FanOut]
            .into_iter()
            .flat_map(|k| [240, 960].map(|nu| NetworkShape::new(k, nu)))
            .collect(),
        dropouts: vec![0.0, 0.25],
        train_sizes: vec![None],
        runs: 3,
        seed: 51,
        split: SplitSpec { train_fraction: 0.75, seed: 51 },
        base: TrainConfig::default(),
    };
    let a = grid_search(&ds, &emb, &spec).unwrap();
    let b = grid_search(&ds, &emb, &spec).unwrap();
    let sorted = a.rows.windows(2).all(|w| w[0].mean_mae <= w[1].mean_mae);
    let best = a.best().map_or(f64::INFINITY, |r| r.mean_mae);
    let desc = a.best().map_or(String::from("none"), |r| {
        format!("{} {} p={}", r.shape, r.total_neurons, r.dropout)
    });
    verdict(
        a == b && sorted && a.rows.len() == 8 && best <= GRID_BEST_MAE_MAX,
        format!(
            "{} rows, sorted {sorted}, repeat identical {}, best {desc} mae {best:.4} (<= {GRID_BEST_MAE_MAX})",
            a.rows.len(),
            a == b
        ),
    )
}

fn sphere_center_error() -> Verdict {
    let ds = normalize(&generate_sphere(8000, 61).unwrap());
    let (_, emb) = pca_embed(&ds).unwrap();
    let ((tr, tr_emb), (te, te_emb)) = split_pairs(&ds, &emb, 61);
    let mut cfg = default_config(3);
    cfg.seed = 61;
    let model = fit(&tr, &tr_emb, &cfg).unwrap();
    let err = validation_map(&model, &te, &te_emb).unwrap();
    let centroid = emb.coords.mean_axis(Axis(0)).unwrap();
    let radius: Vec<f64> = te_emb
        .coords
        .rows()
        .into_iter()
        .map(|p| (p[0] - centroid[0]).hypot(p[1] - centroid[1]))
        .collect();
    let r_max = radius.iter().copied().fold(0.0, f64::max);
    let mean_where = |keep: &dyn Fn(f64) -> bool| {
        let sel: Vec<f64> = err
            .iter()
            .zip(&radius)
            .filter(|(_, &r)| keep(r))
            .map(|(e, _)| *e)
            .collect();
        sel.iter().sum::<f64>() / sel.len().max(1) as f64
    };
    let center = mean_where(&|r| r <= 0.3 * r_max);
    let rim = mean_where(&|r| r >= 0.8 * r_max);
    let ratio = center / rim;
    verdict(
        ratio >= SPHERE_CENTER_RIM_MIN,
        format!(
            "center mean rmse {center:.4}, rim {rim:.4}, ratio {ratio:.2} (>= {SPHERE_CENTER_RIM_MIN})"
        ),
    )
}

fn property_suites() -> Verdict {
    let mut failures = Vec::new();

    let (ds, emb) = blobs_with_pca(300, 6, 3, 71);
    let mut cfg = default_config(6);
    cfg.layers = vec![
        LayerSpec::relu(16),
        LayerSpec::relu(16),
        LayerSpec::relu(16),
        LayerSpec::relu(16),
        LayerSpec::sigmoid(6),
    ];
    cfg.max_epochs = 30;
    cfg.seed = 71;
    let m1 = fit(&ds, &emb, &cfg).unwrap();
    let m2 = fit(&ds, &emb, &cfg).unwrap();
    if m1.to_json().unwrap() != m2.to_json().unwrap() {
        failures.push("training determinism");
    }
    let reloaded = NNInvModel::read_json(m1.to_json().unwrap().as_bytes()).unwrap();
    if reloaded.infer(emb.coords.view()).unwrap() != m1.infer(emb.coords.view()).unwrap() {
        failures.push("model persistence");
    }

    let raw = generate_blobs(200, 4, 2, 3.0, 72).unwrap();
    let once = normalize(&raw);
    let twice = normalize(&once);
    let drift = (&once.values - &twice.values).mapv(f64::abs).fold(0.0, |a: f64, &b| a.max(b));
    if drift > 1e-12 {
        failures.push("normalization idempotence");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let layers = vec![
            LayerSpec::relu(rng.random_range(2..9)),
            LayerSpec::relu(rng.random_range(2..9)),
            LayerSpec::sigmoid(rng.random_range(1..5)),
        ];
        let net = Network::new(2, &layers, &mut rng).unwrap();
        let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        worst_grad = worst_grad.max(gradient_check(&net, &x, 1e-5).unwrap());
    }
    if worst_grad >= GRADIENT_CHECK_MAX {
        failures.push("gradient check");
    }

    let planar = planar_dataset(200, 74);
    let pca = pca_fit(planar.values.view()).unwrap();
    let back = pca.inverse(pca.project(planar.values.view()).unwrap().view()).unwrap();
    let pca_err = (&back - &planar.values).mapv(f64::abs).fold(0.0, |a: f64, &b| a.max(b));
    if pca_err > PCA_EXACT_TOL {
        failures.push("PCA round trip");
    }

    let p = Array2::from_shape_simple_fn((100, 7), || rng.random::<f64>());
    let t = Array2::from_shape_simple_fn((100, 7), || rng.random::<f64>());
    let mut sq = 0.0;
    for i in 0..100 {
        for j in 0..7 {
            sq += (p[[i, j]] - t[[i, j]]).powi(2);
        }
    }
    if (metrics::mse(p.view(), t.view()).unwrap() - sq / 700.0).abs() > METRIC_ORACLE_TOL {
        failures.push("metric oracle");
    }

    let grid = PixelGrid::new(2, Extent::new(0.0, 1.0, 0.0, 1.0)).unwrap();
    let mut buf = Vec::new();
    write_ppm(&RgbMap::new(grid, vec![0; 12]), &mut buf).unwrap();
    let header = read_ppm_header(&buf).unwrap();
    if !buf.starts_with(b"P6\n2 2\n255\n") || buf[header.data_offset..] != [0u8; 12] {
        failures.push("PPM layout");
    }

    let emb_src = Embedding::new(emb.coords.clone(), ProjectionSource::Pca).unwrap();
    if emb_src.extent != emb.extent {
        failures.push("embedding extent");
    }

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "determinism, persistence, normalization, gradient check {worst_grad:.1e}, PCA {pca_err:.1e}, metric oracle, PPM layout"
            )
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}
