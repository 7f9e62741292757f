//! The inverse-projection model: a trained network plus the input scaling
//! and output normalization needed to use it on raw screen coordinates.
//!
//! Model files are a single JSON document:
//!
//! ```text
//! {"magic":"NNINV1","input_extent":{..},"output_dim":d,"norm_min":[..],
//!  "norm_max":[..],"layers":[{"units","activation","weights","biases"}],
//!  "metadata":{..}}
//! ```
//!
//! Floats are written in shortest round-trip form, so a reload reproduces
//! every parameter bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{split_indices, Dataset, SplitSpec};
use crate::nn::{self, Activation, Dense, Network, NetworkShape, ShapeKind, TrainConfig, TrainReport};
use crate::projection::{Embedding, Extent, PcaModel};
use crate::{par, Error, InverseProjection, Result};

pub const MAGIC: &str = "NNINV1";

/// Rows per parallel inference chunk.
const INFER_CHUNK: usize = 1024;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub projection: String,
    #[serde(default)]
    pub dataset: String,
    pub train_config: Option<TrainConfig>,
    pub report: Option<TrainReport>,
    /// Present when the training embedding came from PCA.
    #[serde(default)]
    pub pca: Option<PcaModel>,
    /// Split used to hold out the test rows, if any.
    #[serde(default)]
    pub split: Option<SplitSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NNInvModel {
    pub network: Network,
    pub input_extent: Extent,
    pub norm_min: Vec<f64>,
    pub norm_max: Vec<f64>,
    pub metadata: ModelMetadata,
}

impl NNInvModel {
    pub fn new(
        network: Network,
        input_extent: Extent,
        norm_min: Vec<f64>,
        norm_max: Vec<f64>,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        if !input_extent.as_array().iter().all(|v| v.is_finite())
            || input_extent.width() < 0.0
            || input_extent.height() < 0.0
        {
            return Err(Error::invalid(format!("invalid input extent {input_extent:?}")));
        }
        if network.input_dim() != 2 {
            return Err(Error::shape(format!(
                "network must take 2 inputs, takes {}",
                network.input_dim()
            )));
        }
        let d = network.output_dim();
        if norm_min.len() != d || norm_max.len() != d {
            return Err(Error::shape(format!(
                "normalization vectors must have length {d}"
            )));
        }
        Ok(Self {
            network,
            input_extent,
            norm_min,
            norm_max,
            metadata,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.network.output_dim()
    }

    /// Is a PCA projection recorded with the model?
    pub fn pca(&self) -> Option<&PcaModel> {
        self.metadata.pca.as_ref()
    }

    /// Maps the training extent to `[0,1]^2`. An axis of zero extent carries
    /// no information and maps to 0.5.
    fn scale_inputs(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        let e = &self.input_extent;
        let axis = |v: f64, lo: f64, span: f64| if span > 0.0 { (v - lo) / span } else { 0.5 };
        let mut out = points.to_owned();
        for mut row in out.rows_mut() {
            row[0] = axis(row[0], e.xmin, e.width());
            row[1] = axis(row[1], e.ymin, e.height());
        }
        out
    }

    /// Inverse-projects an `n x 2` batch into `[0,1]^d`.
    pub fn infer(&self, points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if points.ncols() != 2 {
            return Err(Error::shape(format!(
                "points must have 2 columns, got {}",
                points.ncols()
            )));
        }
        let n = points.nrows();
        if n <= INFER_CHUNK {
            return Ok(self.infer_chunk(points));
        }
        let chunks = par::map_indexed(n.div_ceil(INFER_CHUNK), |c| {
            let lo = c * INFER_CHUNK;
            let hi = (lo + INFER_CHUNK).min(n);
            self.infer_chunk(points.slice(ndarray::s![lo..hi, ..]))
        });
        let views: Vec<_> = chunks.iter().map(|c| c.view()).collect();
        Ok(ndarray::concatenate(Axis(0), &views).expect("equal widths"))
    }

    fn infer_chunk(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        let scaled = self.scale_inputs(points);
        let mut out = self.network.forward_unchecked(scaled.view());
        // Far outside the training extent the sigmoid can saturate to exactly 0/1
        // or receive NaN from inf*0; keep the output inside [0,1].
        out.mapv_inplace(|v| if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) });
        out
    }

    pub fn infer_point(&self, x: f64, y: f64) -> Vec<f64> {
        self.infer_chunk(ndarray::arr2(&[[x, y]]).view()).row(0).to_vec()
    }

    /// Maps normalized outputs back to the original data units.
    pub fn denormalize(&self, instances: ArrayView2<'_, f64>) -> Array2<f64> {
        let lo = Array1::from(self.norm_min.clone());
        let span = Array1::from(
            self.norm_max
                .iter()
                .zip(&self.norm_min)
                .map(|(h, l)| h - l)
                .collect::<Vec<_>>(),
        );
        &instances * &span + &lo
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile::from(self))?)
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer(writer, &ModelFile::from(self))?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(reader)
            .map_err(|e| Error::Model(format!("not a JSON document: {e}")))?;
        match value.get("magic").and_then(|m| m.as_str()) {
            Some(MAGIC) => {}
            Some(other) => return Err(Error::BadMagic(other.to_string())),
            None => return Err(Error::BadMagic(String::new())),
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::Model(e.to_string()))?;
        file.into_model()
    }
}

impl InverseProjection for NNInvModel {
    fn output_dim(&self) -> usize {
        self.network.output_dim()
    }

    fn infer_batch(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        self.infer(points).expect("points are n x 2")
    }
}

pub fn save_model(model: &NNInvModel, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    model.write_json(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NNInvModel> {
    NNInvModel::read_json(BufReader::new(File::open(path)?))
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    units: usize,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    magic: String,
    input_extent: Extent,
    output_dim: usize,
    norm_min: Vec<f64>,
    norm_max: Vec<f64>,
    layers: Vec<LayerFile>,
    metadata: ModelMetadata,
}

impl From<&NNInvModel> for ModelFile {
    fn from(m: &NNInvModel) -> Self {
        let layers = m
            .network
            .layers()
            .iter()
            .map(|l| LayerFile {
                units: l.fan_out(),
                activation: l.activation,
                weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                biases: l.biases.to_vec(),
            })
            .collect();
        Self {
            magic: MAGIC.to_string(),
            input_extent: m.input_extent,
            output_dim: m.output_dim(),
            norm_min: m.norm_min.clone(),
            norm_max: m.norm_max.clone(),
            layers,
            metadata: m.metadata.clone(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<NNInvModel> {
        let mut dense = Vec::with_capacity(self.layers.len());
        for (k, l) in self.layers.into_iter().enumerate() {
            let rows = l.weights.len();
            let cols = l.weights.first().map_or(0, Vec::len);
            if cols != l.units || l.weights.iter().any(|r| r.len() != cols) {
                return Err(Error::Model(format!(
                    "layer {k}: weight rows must all have {} entries",
                    l.units
                )));
            }
            let weights = Array2::from_shape_vec((rows, cols), l.weights.concat())
                .map_err(|e| Error::Model(e.to_string()))?;
            dense.push(Dense {
                weights,
                biases: Array1::from(l.biases),
                activation: l.activation,
            });
        }
        let network = Network::from_layers(dense).map_err(|e| Error::Model(e.to_string()))?;
        if network.output_dim() != self.output_dim {
            return Err(Error::Model(format!(
                "output_dim {} does not match last layer width {}",
                self.output_dim,
                network.output_dim()
            )));
        }
        NNInvModel::new(
            network,
            self.input_extent,
            self.norm_min,
            self.norm_max,
            self.metadata,
        )
        .map_err(|e| Error::Model(e.to_string()))
    }
}

/// Trains the inverse projection on row-aligned `(ds, emb)` pairs.
///
/// Embedding coordinates are rescaled from their bounding box to `[0,1]^2`
/// before entering the network; the box is stored in the model.
pub fn fit(ds: &Dataset, emb: &Embedding, cfg: &TrainConfig) -> Result<NNInvModel> {
    emb.check_paired(ds)?;
    if !ds.is_normalized() {
        return Err(Error::invalid("dataset must be normalized to [0, 1] before fitting"));
    }
    let extent = emb.extent;
    let placeholder = NNInvModel {
        network: Network::from_layers(vec![Dense {
            weights: Array2::zeros((2, ds.dim())),
            biases: Array1::zeros(ds.dim()),
            activation: Activation::Sigmoid,
        }])?,
        input_extent: extent,
        norm_min: ds.norm_min.clone(),
        norm_max: ds.norm_max.clone(),
        metadata: ModelMetadata::default(),
    };
    let inputs = placeholder.scale_inputs(emb.coords.view());
    let (network, report) = nn::train(inputs.view(), ds.values.view(), cfg)?;
    let metadata = ModelMetadata {
        projection: emb.source.to_string(),
        dataset: String::new(),
        train_config: Some(cfg.clone()),
        report: Some(report),
        pca: None,
        split: None,
    };
    NNInvModel::new(network, extent, ds.norm_min.clone(), ds.norm_max.clone(), metadata)
}

/// The architecture used when none is requested: Straight, 960 neurons.
pub fn default_config(output_dim: usize) -> TrainConfig {
    TrainConfig::for_shape(NetworkShape::new(ShapeKind::Straight, 960), output_dim)
        .expect("960 is a valid budget")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchSpec {
    pub shapes: Vec<NetworkShape>,
    pub dropouts: Vec<f64>,
    /// Training-set sizes drawn from the training part; `None` uses all of it.
    pub train_sizes: Vec<Option<usize>>,
    pub runs: usize,
    pub seed: u64,
    pub split: SplitSpec,
    /// Optimizer and stopping settings shared by every configuration.
    pub base: TrainConfig,
}

impl GridSearchSpec {
    /// Every shape on the neuron ladder with the three searched dropout rates.
    pub fn full_ladder() -> Vec<(NetworkShape, f64)> {
        let mut out = Vec::new();
        for kind in ShapeKind::ALL {
            for nu in nn::NEURON_LADDER {
                for p in [0.125, 0.25, 0.5] {
                    out.push((NetworkShape::new(kind, nu), p));
                }
            }
        }
        out
    }

    fn configurations(&self) -> Vec<(NetworkShape, f64, Option<usize>)> {
        let mut out = Vec::new();
        for &size in &self.train_sizes {
            for &shape in &self.shapes {
                for &p in &self.dropouts {
                    out.push((shape, p, size));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub shape: ShapeKind,
    pub total_neurons: usize,
    pub layers: Vec<usize>,
    pub dropout: f64,
    pub train_size: usize,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub run_maes: Vec<f64>,
    pub mean_epochs: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failed: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub rows: Vec<GridRow>,
}

impl GridSearchResult {
    pub fn best(&self) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.failed.is_none())
    }
}

/// Deterministic per-(configuration, run) seed.
fn derive_seed(base: u64, config: usize, run: usize) -> u64 {
    // splitmix64 finalizer over a packed index
    let mut z = base
        .wrapping_add((config as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((run as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn test_mae(model: &NNInvModel, test: &Dataset, emb: &Embedding) -> f64 {
    let pred = model.infer_batch(emb.coords.view());
    (&pred - &test.values).mapv(f64::abs).mean().unwrap_or(f64::NAN)
}

/// Trains every configuration `runs` times and ranks them by mean test MAE.
///
/// Configurations and runs execute in parallel; each run's seed depends only
/// on `(spec.seed, configuration index, run index)`, so the result does not
/// depend on scheduling. Failed runs mark their row instead of aborting.
pub fn grid_search(ds: &Dataset, emb: &Embedding, spec: &GridSearchSpec) -> Result<GridSearchResult> {
    if spec.runs == 0 {
        return Err(Error::invalid("grid search needs at least one run"));
    }
    emb.check_paired(ds)?;
    let (train_idx, test_idx) = split_indices(ds.len(), spec.split)?;
    let test = ds.select(&test_idx);
    let test_emb = emb.select(&test_idx)?;
    let configs = spec.configurations();

    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..spec.runs).map(move |r| (c, r)))
        .collect();
    let outcomes = par::map_indexed(jobs.len(), |j| -> Result<(f64, usize)> {
        let (c, r) = jobs[j];
        let (shape, dropout, size) = configs[c];
        let take = size.unwrap_or(train_idx.len()).min(train_idx.len());
        let rows = &train_idx[..take];
        let mut cfg = TrainConfig::for_shape(shape, ds.dim())?;
        cfg.dropout_p = dropout;
        cfg.learning_rate = spec.base.learning_rate;
        cfg.batch_size = spec.base.batch_size;
        cfg.max_epochs = spec.base.max_epochs;
        cfg.patience = spec.base.patience;
        cfg.validation_fraction = spec.base.validation_fraction;
        cfg.adam = spec.base.adam;
        cfg.seed = derive_seed(spec.seed, c, r);
        let model = fit(&ds.select(rows), &emb.select(rows)?, &cfg)?;
        let epochs = model.metadata.report.as_ref().map_or(0, |r| r.epochs_run);
        Ok((test_mae(&model, &test, &test_emb), epochs))
    });

    let mut rows = Vec::with_capacity(configs.len());
    for (c, &(shape, dropout, size)) in configs.iter().enumerate() {
        let results = &outcomes[c * spec.runs..(c + 1) * spec.runs];
        let layers = shape.hidden_sizes().map(|s| s.to_vec()).unwrap_or_default();
        let train_size = size.unwrap_or(train_idx.len()).min(train_idx.len());
        let failure = results.iter().find_map(|r| r.as_ref().err().map(|e| e.to_string()));
        let (maes, epochs): (Vec<f64>, Vec<usize>) =
            results.iter().filter_map(|r| r.as_ref().ok().copied()).unzip();
        let (mean, std) = mean_std(&maes);
        rows.push(GridRow {
            shape: shape.kind,
            total_neurons: shape.total_neurons,
            layers,
            dropout,
            train_size,
            mean_mae: if failure.is_some() { f64::NAN } else { mean },
            std_mae: if failure.is_some() { f64::NAN } else { std },
            run_maes: maes,
            mean_epochs: epochs.iter().sum::<usize>() as f64 / epochs.len().max(1) as f64,
            failed: failure,
        });
    }
    // stable: ties keep enumeration order; failed rows sink to the bottom
    rows.sort_by(|a, b| {
        a.failed
            .is_some()
            .cmp(&b.failed.is_some())
            .then(a.mean_mae.total_cmp(&b.mean_mae))
    });
    Ok(GridSearchResult { rows })
}

/// Mean and population standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Evenly spaced inverse projections along the segment `a -> b`, endpoints included.
pub fn interpolate<B: InverseProjection + ?Sized>(
    model: &B,
    a: [f64; 2],
    b: [f64; 2],
    steps: usize,
) -> Result<Array2<f64>> {
    if steps < 2 {
        return Err(Error::invalid(format!("steps must be at least 2, got {steps}")));
    }
    let last = (steps - 1) as f64;
    let points = Array2::from_shape_fn((steps, 2), |(i, j)| {
        if i == 0 {
            a[j]
        } else if i == steps - 1 {
            b[j]
        } else {
            let t = i as f64 / last;
            a[j] + (b[j] - a[j]) * t
        }
    });
    Ok(model.infer_batch(points.view()))
}
