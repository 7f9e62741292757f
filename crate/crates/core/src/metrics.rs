//! Reconstruction errors and inference timing.
//!
//! All error functions take predictions and ground truth as `n x d` arrays of
//! normalized values. `mse` and `mae` average over points and components;
//! `mean_squared_norm` averages the squared Euclidean error per point.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, ArrayView2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::projection::{Embedding, Extent};
use crate::{Error, InverseProjection, Result};

fn check_pair(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<()> {
    if pred.dim() != truth.dim() {
        return Err(Error::shape(format!(
            "predictions are {:?}, ground truth is {:?}",
            pred.dim(),
            truth.dim()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    Ok(())
}

/// Mean squared error per component.
pub fn mse(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<f64> {
    check_pair(pred, truth)?;
    let sum = Zip::from(pred).and(truth).fold(0.0, |acc, &p, &t| acc + (p - t) * (p - t));
    Ok(sum / pred.len() as f64)
}

/// Mean over points of `|x - x_hat|^2`.
pub fn mean_squared_norm(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(mse(pred, truth)? * pred.ncols() as f64)
}

/// Mean absolute error per component.
pub fn mae(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<f64> {
    check_pair(pred, truth)?;
    let sum = Zip::from(pred).and(truth).fold(0.0, |acc, &p, &t| acc + (p - t).abs());
    Ok(sum / pred.len() as f64)
}

/// Root of the mean squared component error, one value per row.
pub fn per_point_rmse(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    check_pair(pred, truth)?;
    let d = pred.ncols() as f64;
    Ok(pred
        .rows()
        .into_iter()
        .zip(truth.rows())
        .map(|(p, t)| {
            let s: f64 = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
            (s / d).sqrt()
        })
        .collect())
}

/// Rescales to `[0,1]`; a constant input maps to all zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    values
        .iter()
        .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.0 })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    pub batch_size: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    pub mae: f64,
    pub mse_norm: f64,
    pub per_point_rmse: Vec<f64>,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Vec<TimingPoint>>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Inverse-projects `emb` and compares with `ds` row by row.
pub fn evaluate<B: InverseProjection + ?Sized>(
    b: &B,
    ds: &Dataset,
    emb: &Embedding,
) -> Result<EvalReport> {
    emb.check_paired(ds)?;
    if ds.is_empty() {
        return Err(Error::invalid("empty test set"));
    }
    if ds.dim() != b.output_dim() {
        return Err(Error::shape(format!(
            "dataset has {} columns, inverse projection yields {}",
            ds.dim(),
            b.output_dim()
        )));
    }
    let pred = b.infer_batch(emb.coords.view());
    let truth = ds.values.view();
    Ok(EvalReport {
        mse: mse(pred.view(), truth)?,
        mae: mae(pred.view(), truth)?,
        mse_norm: mean_squared_norm(pred.view(), truth)?,
        per_point_rmse: per_point_rmse(pred.view(), truth)?,
        n_test: ds.len(),
        timing: None,
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Wall-clock median over `repeats` runs of inverse-projecting uniformly
/// random points from `extent`, per batch size.
pub fn timing_curve<B: InverseProjection + ?Sized>(
    b: &B,
    extent: &Extent,
    batch_sizes: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Vec<TimingPoint>> {
    if repeats < 5 {
        return Err(Error::invalid("timing needs at least 5 repetitions"));
    }
    if batch_sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("batch sizes must be ascending"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(batch_sizes.len());
    for &n in batch_sizes {
        let pts = Array2::from_shape_fn((n, 2), |(_, c)| {
            let u: f64 = rng.random();
            if c == 0 {
                extent.xmin + u * extent.width()
            } else {
                extent.ymin + u * extent.height()
            }
        });
        // One untimed warm-up run.
        std::hint::black_box(b.infer_batch(pts.view()));
        let runs = (0..repeats)
            .map(|_| {
                let t = Instant::now();
                std::hint::black_box(b.infer_batch(pts.view()));
                t.elapsed().as_secs_f64()
            })
            .collect();
        out.push(TimingPoint {
            batch_size: n,
            seconds: median(runs),
        });
    }
    Ok(out)
}

pub fn write_timing_csv<W: Write>(points: &[TimingPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["batch_size", "seconds"]).map_err(crate::data::csv_io)?;
    for p in points {
        w.write_record([p.batch_size.to_string(), format!("{:e}", p.seconds)])
            .map_err(crate::data::csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_timing_csv(points: &[TimingPoint], path: impl AsRef<Path>) -> Result<()> {
    write_timing_csv(points, std::fs::File::create(path)?)
}
