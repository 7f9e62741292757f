use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use unproject::classifiers::{select_classes, Ensemble};
use unproject::data::{
    generate_blobs, generate_sphere, generate_swiss_roll, load_dataset, normalize, normalize_with,
    split_indices, write_dataset_csv, Dataset, SplitSpec,
};
use unproject::densemaps::{
    agreement_map, gradient_map, render, roundtrip_map_for, validation_map, write_ppm,
    Colormap, PixelGrid, RgbMap, ScalarField,
};
use unproject::metrics::{self, timing_curve, write_timing_csv};
use unproject::model::{
    fit, grid_search, interpolate, load_model, GridSearchSpec, NNInvModel,
};
use unproject::nn::{NetworkShape, ShapeKind, TrainConfig, NEURON_LADDER};
use unproject::projection::{
    load_embedding, pca_embed, write_embedding_csv, Embedding, PcaModel,
};

use crate::output::{read_to_string, write_atomic, write_bytes_atomic};

#[derive(Parser, Debug)]
#[command(name = "unproject", version, about = "Learned inverse projections and dense maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "verb", rename_all = "lowercase")]
pub enum Command {
    /// Generate a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Fit PCA on the min-max normalized data and write the 2-D embedding.
    Project(ProjectArgs),
    /// Train an inverse projection on (data, embedding) pairs.
    Train(TrainArgs),
    /// Evaluate a model on held-out rows.
    Eval(EvalArgs),
    /// Train a grid of architectures and rank them by test MAE.
    Gridsearch(GridSearchArgs),
    /// Render a dense map.
    Map(MapArgs),
    /// Inverse-project evenly spaced points along a segment.
    Interpolate(InterpolateArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Blobs,
    Sphere,
    #[value(name = "swissroll", alias = "swiss-roll")]
    SwissRoll,
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: DataKind,
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Dimensions (blobs only).
    #[arg(long, default_value_t = 50)]
    pub d: usize,
    /// Number of centers (blobs only).
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Standard deviation around each center (blobs only).
    #[arg(long, default_value_t = 1.0)]
    pub spread: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the fitted PCA as JSON.
    #[arg(long)]
    pub pca_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeArg {
    Straight,
    Wide,
    Bottleneck,
    #[value(name = "fanout", alias = "fan-out")]
    FanOut,
}

impl From<ShapeArg> for ShapeKind {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Straight => ShapeKind::Straight,
            ShapeArg::Wide => ShapeKind::Wide,
            ShapeArg::Bottleneck => ShapeKind::Bottleneck,
            ShapeArg::FanOut => ShapeKind::FanOut,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// 2-D coordinates (CSV with header x,y). Without it, PCA is fitted and stored in the model.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// PCA JSON from `project --pca-out`; enables round-trip maps.
    #[arg(long)]
    pub pca: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ShapeArg::Straight)]
    pub shape: ShapeArg,
    /// Total hidden neurons over the four hidden layers.
    #[arg(long, default_value_t = 960)]
    pub neurons: usize,
    #[arg(long, default_value_t = 0.0)]
    pub dropout: f64,
    /// Fraction of rows used for training; the rest is held out for `eval`.
    #[arg(long, default_value_t = 0.75)]
    pub split: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Defaults to projecting the data with the model's PCA.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Evaluate every row instead of the model's held-out split.
    #[arg(long)]
    pub all: bool,
    /// Batch sizes for an inference timing curve (median of 5 runs each).
    #[arg(long, value_delimiter = ',')]
    pub timing: Vec<usize>,
    #[arg(long)]
    pub timing_csv: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct GridSearchArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ShapeArg::Straight, ShapeArg::Wide, ShapeArg::Bottleneck, ShapeArg::FanOut])]
    pub shapes: Vec<ShapeArg>,
    #[arg(long, value_delimiter = ',', default_values_t = NEURON_LADDER)]
    pub neurons: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.125, 0.25, 0.5])]
    pub dropouts: Vec<f64>,
    /// Training-set sizes drawn from the training split; all rows when absent.
    #[arg(long, value_delimiter = ',')]
    pub train_sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.75)]
    pub split: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Gradient,
    Agreement,
    Roundtrip,
    Validation,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColormapArg {
    Viridis,
    Grayscale,
}

impl From<ColormapArg> for Colormap {
    fn from(c: ColormapArg) -> Self {
        match c {
            ColormapArg::Viridis => Colormap::Viridis,
            ColormapArg::Grayscale => Colormap::Grayscale,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct MapArgs {
    #[arg(long = "type", value_enum)]
    pub kind: MapKind,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 400)]
    pub resolution: usize,
    /// Fraction of the embedding's extent added on each side.
    #[arg(long, default_value_t = 0.05)]
    pub margin: f64,
    #[arg(long, value_enum, default_value_t = ColormapArg::Viridis)]
    pub colormap: ColormapArg,
    /// Labeled data (agreement, validation).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Embedding of --data (validation); defaults to the model's PCA.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// The two classes compared by the agreement map; defaults to the two smallest labels.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub classes: Vec<u32>,
    /// Validation map over every row instead of the model's held-out split.
    #[arg(long)]
    pub all: bool,
    /// Write `<out>.txt` with the scalar range (gradient, validation).
    #[arg(long)]
    pub legend: bool,
    /// PPM image; `validation` also accepts a `.csv` path for per-point errors.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct InterpolateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Start point `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub from: [f64; 2],
    /// End point `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub to: [f64; 2],
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Write raw data units instead of normalized values.
    #[arg(long)]
    pub denormalize: bool,
    /// CSV path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset shown as the scatter backdrop (labels feed agreement maps).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
}

fn parse_point(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `x,y`, got {s:?}"));
    }
    let mut out = [0.0; 2];
    for (o, p) in out.iter_mut().zip(parts) {
        let v: f64 = p.parse().map_err(|_| format!("not a number: {p:?}"))?;
        if !v.is_finite() {
            return Err(format!("coordinate must be finite: {p:?}"));
        }
        *o = v;
    }
    Ok(out)
}

/// An error caused by the invocation rather than by this program.
#[derive(Debug)]
pub struct UserError(pub String);

impl std::fmt::Display for UserError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

fn user(msg: impl Into<String>) -> anyhow::Error {
    UserError(msg.into()).into()
}

/// 1 for invalid input, files or flags; 2 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UserError>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
        {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<unproject::Error>() {
            return match e {
                unproject::Error::Diverged { .. } => 2,
                _ => 1,
            };
        }
    }
    2
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return exit_code(&e);
    }
    eprintln!(
        "config: {}",
        serde_json::to_string(&cli.command).unwrap_or_default()
    );
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("UNPROJECT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| user(format!("UNPROJECT_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        // Fails only if a pool already exists (e.g. repeated calls in tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Project(a) => project(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Gridsearch(a) => gridsearch(a),
        Command::Map(a) => map(a),
        Command::Interpolate(a) => interpolate_cmd(a),
        Command::Serve(a) => crate::service::serve_blocking(a),
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let ds = match a.kind {
        DataKind::Blobs => generate_blobs(a.n, a.d, a.k, a.spread, a.seed)?,
        DataKind::Sphere => generate_sphere(a.n, a.seed)?,
        DataKind::SwissRoll => generate_swiss_roll(a.n, a.seed)?.dataset,
    };
    write_atomic(&a.out, |w| Ok(write_dataset_csv(&ds, w)?))?;
    eprintln!("wrote {} rows x {} columns to {}", ds.len(), ds.dim(), a.out.display());
    Ok(())
}

fn load_data(path: &Path) -> Result<Dataset> {
    load_dataset(path).with_context(|| format!("cannot load dataset {}", path.display()))
}

fn load_emb(path: &Path) -> Result<Embedding> {
    load_embedding(path).with_context(|| format!("cannot load embedding {}", path.display()))
}

fn load_pca(path: &Path) -> Result<PcaModel> {
    serde_json::from_str(&read_to_string(path)?)
        .with_context(|| format!("{} is not a PCA JSON file", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

fn project(a: ProjectArgs) -> Result<()> {
    let ds = normalize(&load_data(&a.data)?);
    let (pca, emb) = pca_embed(&ds)?;
    write_atomic(&a.out, |w| Ok(write_embedding_csv(&emb, w)?))?;
    if let Some(p) = &a.pca_out {
        write_json(p, &pca)?;
    }
    eprintln!(
        "explained variance {:.6}, {:.6}",
        pca.explained_variance[0], pca.explained_variance[1]
    );
    Ok(())
}

/// Normalized data plus its embedding: from file, or PCA computed here.
fn training_pair(
    data: &Path,
    embedding: Option<&Path>,
) -> Result<(Dataset, Embedding, Option<PcaModel>)> {
    let ds = normalize(&load_data(data)?);
    match embedding {
        Some(p) => {
            let emb = load_emb(p)?;
            emb.check_paired(&ds)?;
            Ok((ds, emb, None))
        }
        None => {
            let (pca, emb) = pca_embed(&ds)?;
            Ok((ds, emb, Some(pca)))
        }
    }
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn train(a: TrainArgs) -> Result<()> {
    let (ds, emb, fitted_pca) = training_pair(&a.data, a.embedding.as_deref())?;
    let pca = match &a.pca {
        Some(p) => Some(load_pca(p)?),
        None => fitted_pca,
    };
    if let Some(p) = &pca {
        if p.dim() != ds.dim() {
            bail!(user(format!(
                "PCA has {} dimensions, data has {}",
                p.dim(),
                ds.dim()
            )));
        }
    }
    let split = SplitSpec {
        train_fraction: a.split,
        seed: a.split_seed,
    };
    let (train_idx, _) = split_indices(ds.len(), split)?;
    let mut cfg = TrainConfig::for_shape(NetworkShape::new(a.shape.into(), a.neurons), ds.dim())?;
    cfg.dropout_p = a.dropout;
    cfg.seed = a.seed;
    cfg.max_epochs = a.max_epochs;
    cfg.patience = a.patience;
    cfg.learning_rate = a.lr;
    cfg.batch_size = a.batch_size;
    eprintln!(
        "layers {:?}, {} training rows",
        cfg.layers.iter().map(|l| l.units).collect::<Vec<_>>(),
        train_idx.len()
    );
    let mut model = fit(
        &ds.select(&train_idx),
        &emb.select(&train_idx)?,
        &cfg,
    )?;
    model.metadata.dataset = file_stem(&a.data);
    model.metadata.split = Some(split);
    if pca.is_some() {
        model.metadata.projection = "pca".into();
    }
    model.metadata.pca = pca;
    if let Some(r) = &model.metadata.report {
        eprintln!(
            "stopped after {} epochs, best epoch {} with validation MAE {:.5}",
            r.epochs_run, r.best_epoch, r.best_val_mae
        );
    }
    write_atomic(&a.out, |w| Ok(model.write_json(w)?))?;
    Ok(())
}

fn open_model(path: &Path) -> Result<NNInvModel> {
    load_model(path).with_context(|| format!("cannot load model {}", path.display()))
}

/// Data normalized with the model's ranges, and its embedding (file or model PCA).
fn model_pair(
    model: &NNInvModel,
    data: &Path,
    embedding: Option<&Path>,
) -> Result<(Dataset, Embedding)> {
    let ds = normalize_with(&load_data(data)?, &model.norm_min, &model.norm_max)?;
    let emb = match embedding {
        Some(p) => load_emb(p)?,
        None => match model.pca() {
            Some(pca) => pca.embed(&ds)?,
            None => bail!(user(
                "no --embedding given and the model has no PCA to project the data with"
            )),
        },
    };
    emb.check_paired(&ds)?;
    Ok((ds, emb))
}

/// The model's held-out rows, or every row with `all`.
fn held_out(model: &NNInvModel, ds: Dataset, emb: Embedding, all: bool) -> Result<(Dataset, Embedding)> {
    match (&model.metadata.split, all) {
        (Some(split), false) => {
            let (_, test) = split_indices(ds.len(), *split)?;
            Ok((ds.select(&test), emb.select(&test)?))
        }
        _ => Ok((ds, emb)),
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = open_model(&a.model)?;
    let (ds, emb) = model_pair(&model, &a.data, a.embedding.as_deref())?;
    let (ds, emb) = held_out(&model, ds, emb, a.all)?;
    let mut report = metrics::evaluate(&model, &ds, &emb)?;
    if !a.timing.is_empty() {
        let curve = timing_curve(&model, &model.input_extent, &a.timing, 5, 0)?;
        if let Some(p) = &a.timing_csv {
            write_atomic(p, |w| Ok(write_timing_csv(&curve, w)?))?;
        }
        report.timing = Some(curve);
    }
    eprintln!(
        "{} rows: mse {:.6}, mae {:.6}",
        report.n_test, report.mse, report.mae
    );
    let json = report.to_json()? + "\n";
    match &a.out {
        Some(p) => write_bytes_atomic(p, json.as_bytes()),
        None => Ok(std::io::stdout().write_all(json.as_bytes())?),
    }
}

fn gridsearch(a: GridSearchArgs) -> Result<()> {
    let (ds, emb, _) = training_pair(&a.data, a.embedding.as_deref())?;
    let shapes = a
        .shapes
        .iter()
        .flat_map(|&s| a.neurons.iter().map(move |&nu| NetworkShape::new(s.into(), nu)))
        .collect();
    let train_sizes = if a.train_sizes.is_empty() {
        vec![None]
    } else {
        a.train_sizes.iter().map(|&n| Some(n)).collect()
    };
    let base = TrainConfig {
        max_epochs: a.max_epochs,
        ..TrainConfig::default()
    };
    let spec = GridSearchSpec {
        shapes,
        dropouts: a.dropouts.clone(),
        train_sizes,
        runs: a.runs,
        seed: a.seed,
        split: SplitSpec {
            train_fraction: a.split,
            seed: a.seed,
        },
        base,
    };
    let result = grid_search(&ds, &emb, &spec)?;
    for row in result.rows.iter().take(5) {
        eprintln!(
            "{:<10} {:>6} {:<24} p={:<5} mae {:.6} +- {:.6}{}",
            row.shape.to_string(),
            row.total_neurons,
            format!("{:?}", row.layers),
            row.dropout,
            row.mean_mae,
            row.std_mae,
            row.failed.as_deref().map(|f| format!(" FAILED: {f}")).unwrap_or_default()
        );
    }
    write_json(&a.out, &result)
}

fn ppm_bytes(map: &RgbMap) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_ppm(map, &mut buf)?;
    Ok(buf)
}

fn legend_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

fn write_legend(out: &Path, min: f64, max: f64) -> Result<()> {
    write_bytes_atomic(
        &legend_path(out),
        format!("min {min:.2}\nmax {max:.2}\n").as_bytes(),
    )
}

/// Smallest two distinct labels.
fn default_classes(labels: &[u32]) -> Result<[u32; 2]> {
    let mut distinct: Vec<u32> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    match distinct.as_slice() {
        [a, b, ..] => Ok([*a, *b]),
        _ => Err(user("agreement maps need data with at least two classes")),
    }
}

/// Fits the default ensemble on the model-normalized rows of classes `a` and `b`.
pub fn fit_agreement_ensemble(ds: &Dataset, classes: Option<[u32; 2]>) -> Result<Ensemble> {
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| user("agreement maps need a labeled dataset"))?;
    let [a, b] = match classes {
        Some(c) => c,
        None => default_classes(labels)?,
    };
    let (x, y) = select_classes(ds.values.view(), labels, a, b);
    if y.is_empty() {
        bail!(user(format!("no rows with labels {a} or {b}")));
    }
    Ok(Ensemble::fit_default(x.view(), &y)?)
}

/// Dots colored by normalized per-point error on a dark background.
fn scatter_image(grid: &PixelGrid, emb: &Embedding, errors: &[f64], cmap: Colormap) -> RgbMap {
    let r = grid.resolution();
    let mut pixels = vec![24u8; 3 * r * r];
    let norm = metrics::min_max_normalize(errors);
    for (p, t) in emb.coords.rows().into_iter().zip(norm) {
        let Some((i, j)) = grid.pixel_of(p[0], p[1]) else {
            continue;
        };
        let color = cmap.color(t);
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (x, y) = (i as i64 + di, j as i64 + dj);
                if x >= 0 && y >= 0 && (x as usize) < r && (y as usize) < r {
                    let k = 3 * grid.index(x as usize, y as usize);
                    pixels[k..k + 3].copy_from_slice(&color);
                }
            }
        }
    }
    RgbMap::new(*grid, pixels)
}

fn map(a: MapArgs) -> Result<()> {
    let model = open_model(&a.model)?;
    if model.input_extent.is_degenerate() || !(a.margin >= 0.0 && a.margin.is_finite()) {
        bail!(user("maps need a model trained on a non-degenerate extent and a non-negative margin"));
    }
    let grid = PixelGrid::new(a.resolution, model.input_extent.expanded(a.margin))
        .map_err(|e| user(e.to_string()))?;
    let cmap: Colormap = a.colormap.into();
    let need_data = || {
        a.data
            .as_deref()
            .ok_or_else(|| user(format!("--data is required for {:?} maps", a.kind)))
    };
    let image = match a.kind {
        MapKind::Gradient => {
            let field: ScalarField = gradient_map(&model, &grid);
            if a.legend {
                write_legend(&a.out, field.min, field.max)?;
            }
            render(&field, cmap)
        }
        MapKind::Agreement => {
            let ds = normalize_with(&load_data(need_data()?)?, &model.norm_min, &model.norm_max)?;
            let classes = (a.classes.len() == 2).then(|| [a.classes[0], a.classes[1]]);
            let ensemble = fit_agreement_ensemble(&ds, classes)?;
            agreement_map(&model, &ensemble, &grid)?.rgb
        }
        MapKind::Roundtrip => {
            roundtrip_map_for(&model, model.pca(), &model.metadata.projection, &grid)?.rgb
        }
        MapKind::Validation => {
            let (ds, emb) = model_pair(&model, need_data()?, a.embedding.as_deref())?;
            let (ds, emb) = held_out(&model, ds, emb, a.all)?;
            let errors = validation_map(&model, &ds, &emb)?;
            let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if a.legend {
                write_legend(&a.out, lo, hi)?;
            }
            if a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let norm = metrics::min_max_normalize(&errors);
                return write_atomic(&a.out, |w| {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record(["x", "y", "rmse", "normalized"])?;
                    for ((p, e), n) in emb.coords.rows().into_iter().zip(&errors).zip(&norm) {
                        c.write_record([p[0], p[1], *e, *n].map(|v| v.to_string()))?;
                    }
                    c.flush()?;
                    Ok(())
                });
            }
            scatter_image(&grid, &emb, &errors, cmap)
        }
    };
    write_bytes_atomic(&a.out, &ppm_bytes(&image)?)?;
    eprintln!("wrote {}x{} map to {}", grid.resolution(), grid.resolution(), a.out.display());
    Ok(())
}

fn interpolate_cmd(a: InterpolateArgs) -> Result<()> {
    let model = open_model(&a.model)?;
    let mut rows = interpolate(&model, a.from, a.to, a.steps)?;
    if a.denormalize {
        rows = model.denormalize(rows.view());
    }
    let write = |w: &mut dyn Write| -> Result<()> {
        let mut c = csv::Writer::from_writer(w);
        c.write_record((0..rows.ncols()).map(|j| format!("f{j}")))?;
        for r in rows.rows() {
            c.write_record(r.iter().map(|v| v.to_string()))?;
        }
        c.flush()?;
        Ok(())
    };
    match &a.out {
        Some(p) => write_atomic(p, write),
        None => write(&mut std::io::stdout().lock()),
    }
}

/// Reads a model, optional dataset and embedding into a service session.
pub fn open_session(
    model: &Path,
    data: Option<&Path>,
    embedding: Option<&Path>,
) -> Result<crate::service::Session> {
    let model = open_model(model)?;
    let (ds, emb) = match data {
        Some(d) => {
            let (ds, emb) = model_pair(&model, d, embedding)?;
            (Some(ds), Some(emb))
        }
        None if embedding.is_some() => bail!(user("--embedding needs --data")),
        None => (None, None),
    };
    Ok(crate::service::Session::new(model, ds, emb))
}

pub(crate) fn anyhow_user(msg: impl Into<String>) -> anyhow::Error {
    user(msg)
}
