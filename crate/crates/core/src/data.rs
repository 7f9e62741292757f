//! Datasets: synthetic generators, per-column min-max normalization,
//! seeded splits and CSV persistence.
//!
//! CSV layout: header `f0,f1,...,f{d-1}` optionally followed by `label`;
//! one decimal row per instance.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub values: Array2<f64>,
    pub labels: Option<Vec<u32>>,
    /// Raw value represented by 0 in each column.
    pub norm_min: Vec<f64>,
    /// Raw value represented by 1 in each column.
    pub norm_max: Vec<f64>,
    /// Columns that had zero range when normalized (mapped to 0).
    pub constant_columns: Vec<bool>,
}

impl Dataset {
    /// Wraps raw values with an identity normalization record.
    pub fn new(values: Array2<f64>, labels: Option<Vec<u32>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != values.nrows() {
                return Err(Error::shape(format!(
                    "{} labels for {} rows",
                    l.len(),
                    values.nrows()
                )));
            }
        }
        let d = values.ncols();
        Ok(Self {
            values,
            labels,
            norm_min: vec![0.0; d],
            norm_max: vec![1.0; d],
            constant_columns: vec![false; d],
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Rows at `indices`, in that order, keeping normalization metadata.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            values: self.values.select(Axis(0), indices),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
            norm_min: self.norm_min.clone(),
            norm_max: self.norm_max.clone(),
            constant_columns: self.constant_columns.clone(),
        }
    }

    /// Maps normalized values back to the raw range.
    pub fn denormalize_row(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        denormalize(row, &self.norm_min, &self.norm_max)
    }

    pub fn is_normalized(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

pub fn denormalize(row: ArrayView1<'_, f64>, norm_min: &[f64], norm_max: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(norm_min.iter().zip(norm_max))
        .map(|(v, (lo, hi))| lo + (hi - lo) * v)
        .collect()
}

/// Per-column min-max scaling into `[0,1]`, composed with any earlier
/// normalization so `norm_min`/`norm_max` always describe the raw range.
/// Idempotent on data whose columns already span exactly `[0,1]`.
pub fn normalize(ds: &Dataset) -> Dataset {
    let mut out = ds.clone();
    if ds.is_empty() {
        return out;
    }
    for (j, mut col) in out.values.axis_iter_mut(Axis(1)).enumerate() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let (old_lo, old_span) = (ds.norm_min[j], ds.norm_max[j] - ds.norm_min[j]);
        if span > 0.0 {
            col.mapv_inplace(|v| ((v - lo) / span).clamp(0.0, 1.0));
            out.norm_min[j] = old_lo + old_span * lo;
            out.norm_max[j] = old_lo + old_span * hi;
        } else {
            col.fill(0.0);
            out.norm_min[j] = old_lo + old_span * lo;
            out.norm_max[j] = out.norm_min[j];
            out.constant_columns[j] = true;
        }
    }
    out
}

/// Scales raw rows with a stored normalization (e.g. a model's), clamping
/// to `[0,1]`. Columns with zero range map to 0.
pub fn normalize_with(ds: &Dataset, norm_min: &[f64], norm_max: &[f64]) -> Result<Dataset> {
    let d = ds.dim();
    if norm_min.len() != d || norm_max.len() != d {
        return Err(Error::shape(format!(
            "normalization covers {} columns, data has {d}",
            norm_min.len()
        )));
    }
    let mut out = Dataset::new(ds.values.clone(), ds.labels.clone())?;
    for (j, mut col) in out.values.axis_iter_mut(Axis(1)).enumerate() {
        let (lo, span) = (norm_min[j], norm_max[j] - norm_min[j]);
        if span > 0.0 {
            col.mapv_inplace(|v| ((v - lo) / span).clamp(0.0, 1.0));
        } else {
            col.fill(0.0);
            out.constant_columns[j] = true;
        }
    }
    out.norm_min = norm_min.to_vec();
    out.norm_max = norm_max.to_vec();
    Ok(out)
}

/// Gaussian blobs around `k` centers drawn uniformly from `[-10,10]^d`.
/// Point `i` belongs to center `i mod k`.
pub fn generate_blobs(n: usize, d: usize, k: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if k == 0 || n < k || d == 0 {
        return Err(Error::invalid(format!(
            "blobs need n >= k >= 1 and d >= 1 (got n={n}, d={d}, k={k})"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(Error::invalid("spread must be finite and non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let box_dist = Uniform::new(-10.0, 10.0).expect("valid range");
    let centers = Array2::from_shape_simple_fn((k, d), || box_dist.sample(&mut rng));
    let labels: Vec<u32> = (0..n).map(|i| (i % k) as u32).collect();
    let mut values = Array2::zeros((n, d));
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let c = centers.row(i % k);
        for (v, cj) in row.iter_mut().zip(c) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = cj + spread * z;
        }
    }
    Dataset::new(values, Some(labels))
}

/// Points uniform on the unit sphere surface (normalized Gaussian vectors).
pub fn generate_sphere(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sphere needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::zeros((n, 3));
    for mut row in values.rows_mut() {
        loop {
            let g: [f64; 3] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
            if norm > 1e-12 {
                for j in 0..3 {
                    row[j] = g[j] / norm;
                }
                break;
            }
        }
    }
    Dataset::new(values, None)
}

#[derive(Clone, Debug)]
pub struct SwissRoll {
    pub dataset: Dataset,
    /// Intrinsic `(t, h)` per row.
    pub intrinsic: Vec<[f64; 2]>,
}

pub const SWISS_ROLL_T: (f64, f64) = (1.5 * PI, 4.5 * PI);
pub const SWISS_ROLL_HEIGHT: f64 = 21.0;
const SWISS_ROLL_BINS: f64 = 6.0;

/// `(t cos t, h, t sin t)` with `t` uniform in `[1.5pi, 4.5pi]` and `h`
/// uniform in `[0, 21]`; labels quantize `t` into six equal bins.
pub fn generate_swiss_roll(n: usize, seed: u64) -> Result<SwissRoll> {
    if n == 0 {
        return Err(Error::invalid("swiss roll needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (t0, t1) = SWISS_ROLL_T;
    let mut values = Array2::zeros((n, 3));
    let mut intrinsic = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for mut row in values.rows_mut() {
        let t = rng.random_range(t0..t1);
        let h = rng.random_range(0.0..SWISS_ROLL_HEIGHT);
        row[0] = t * t.cos();
        row[1] = h;
        row[2] = t * t.sin();
        intrinsic.push([t, h]);
        let bin = ((t - t0) / (t1 - t0) * SWISS_ROLL_BINS).floor();
        labels.push(bin.clamp(0.0, SWISS_ROLL_BINS - 1.0) as u32);
    }
    Ok(SwissRoll {
        dataset: Dataset::new(values, Some(labels))?,
        intrinsic,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.75,
            seed: 0,
        }
    }
}

/// Seeded shuffle of `0..n` cut into `(train, test)` index lists.
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    let n_train = (n as f64 * spec.train_fraction).round() as usize;
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) || n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!(
            "train fraction {} leaves an empty part for {n} rows",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test = order.split_off(n_train);
    Ok((order, test))
}

pub fn split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(ds.len(), spec)?;
    Ok((ds.select(&train), ds.select(&test)))
}

pub fn write_dataset_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("f{j}")).collect();
    if ds.labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(csv_io)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in ds.values.rows().into_iter().enumerate() {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        if let Some(labels) = &ds.labels {
            record.push(labels[i].to_string());
        }
        w.write_record(&record).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset_csv(ds, BufWriter::new(File::create(path)?))
}

pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = r.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_parse)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file, expected header f0,f1,...".into(),
            })
        }
    };
    let mut has_label = false;
    for (j, name) in header.iter().enumerate() {
        if name == "label" && j + 1 == header.len() && j > 0 {
            has_label = true;
        } else if name != format!("f{j}") {
            return Err(Error::Parse {
                line: 1,
                msg: format!("missing or malformed header: expected \"f{j}\", found {name:?}"),
            });
        }
    }
    let d = header.len() - usize::from(has_label);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0;
    for rec in records {
        let rec = rec.map_err(csv_parse)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        for (j, cell) in rec.iter().take(d).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("column f{j}: {cell:?} is not a number"),
            })?;
            values.push(v);
        }
        if has_label {
            let cell = &rec[d];
            let l: u32 = cell.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("label {cell:?} is not a non-negative integer"),
            })?;
            labels.push(l);
        }
        rows += 1;
    }
    let values = Array2::from_shape_vec((rows, d), values).expect("rows checked");
    Dataset::new(values, has_label.then_some(labels))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset_csv(BufReader::new(File::open(path)?))
}

pub(crate) fn csv_parse(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            msg: format!("{kind:?}"),
        },
    }
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::invalid(format!("csv write failed: {kind:?}")),
    }
}
