//! Direct projections `P: R^d -> R^2`.
//!
//! PCA is computed here because the round-trip map needs `P` as a closed
//! form. Any other projection (t-SNE, UMAP, ...) enters as a coordinate
//! file with header `x,y`, row-aligned with its dataset.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{csv_io, csv_parse, Dataset};
use crate::{Error, Result};

/// Axis-aligned rectangle `(xmin, xmax, ymin, ymax)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Extent {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Self {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    /// Bounding box of an `n x 2` point set; `None` when empty.
    pub fn of_points(points: ArrayView2<'_, f64>) -> Option<Self> {
        if points.nrows() == 0 {
            return None;
        }
        let mut e = Self::new(
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in points.rows() {
            e.xmin = e.xmin.min(p[0]);
            e.xmax = e.xmax.max(p[0]);
            e.ymin = e.ymin.min(p[1]);
            e.ymax = e.ymax.max(p[1]);
        }
        Some(e)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
            || !self.width().is_finite()
            || !self.height().is_finite()
    }

    /// Grows each side by `margin` times the width (x) or height (y).
    pub fn expanded(&self, margin: f64) -> Self {
        let (dx, dy) = (self.width() * margin, self.height() * margin);
        Self::new(self.xmin - dx, self.xmax + dx, self.ymin - dy, self.ymax + dy)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xmin && x <= self.xmax && y >= self.ymin && y <= self.ymax
    }

    pub fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(self.xmin, self.xmax), y.clamp(self.ymin, self.ymax))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.xmin, self.xmax, self.ymin, self.ymax]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionSource {
    Pca,
    External(String),
}

impl fmt::Display for ProjectionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectionSource::Pca => f.write_str("pca"),
            ProjectionSource::External(name) => write!(f, "external ({name})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub coords: Array2<f64>,
    pub source: ProjectionSource,
    pub extent: Extent,
}

impl Embedding {
    pub fn new(coords: Array2<f64>, source: ProjectionSource) -> Result<Self> {
        if coords.ncols() != 2 {
            return Err(Error::shape(format!(
                "embedding must have 2 columns, got {}",
                coords.ncols()
            )));
        }
        if !coords.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("embedding has non-finite coordinates"));
        }
        let extent = Extent::of_points(coords.view())
            .ok_or_else(|| Error::invalid("embedding is empty"))?;
        Ok(Self {
            coords,
            source,
            extent,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(self.coords.select(Axis(0), indices), self.source.clone())
    }

    /// Errors unless the embedding is row-aligned with `ds`.
    pub fn check_paired(&self, ds: &Dataset) -> Result<()> {
        if self.len() != ds.len() {
            return Err(Error::RowMismatch {
                dataset: ds.len(),
                embedding: self.len(),
            });
        }
        Ok(())
    }
}

pub fn write_embedding_csv<W: Write>(emb: &Embedding, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y"]).map_err(csv_io)?;
    for row in emb.coords.rows() {
        w.write_record([row[0].to_string(), row[1].to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_embedding(emb: &Embedding, path: impl AsRef<Path>) -> Result<()> {
    write_embedding_csv(emb, BufWriter::new(File::create(path)?))
}

pub fn read_embedding_csv<R: Read>(reader: R, source: ProjectionSource) -> Result<Embedding> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = r.records();
    match records.next() {
        Some(rec) => {
            let rec = rec.map_err(csv_parse)?;
            if rec.len() != 2 || &rec[0] != "x" || &rec[1] != "y" {
                return Err(Error::Parse {
                    line: 1,
                    msg: "missing or malformed header: expected \"x,y\"".into(),
                });
            }
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file, expected header x,y".into(),
            })
        }
    }
    let mut values = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_parse)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        for cell in rec.iter() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: "coordinate is not finite".into(),
                });
            }
            values.push(v);
        }
    }
    let n = values.len() / 2;
    Embedding::new(
        Array2::from_shape_vec((n, 2), values).expect("pairs"),
        source,
    )
}

/// Loads an externally computed embedding; the source name is the file stem.
pub fn load_embedding(path: impl AsRef<Path>) -> Result<Embedding> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "external".into());
    read_embedding_csv(
        BufReader::new(File::open(path)?),
        ProjectionSource::External(name),
    )
}

/// A projection that can be applied to unseen points.
pub trait ParametricProjection: Sync {
    /// `n x d` -> `n x 2`.
    fn project(&self, x: ArrayView2<'_, f64>) -> Array2<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Two orthonormal rows of length d.
    pub components: [Vec<f64>; 2],
    pub explained_variance: [f64; 2],
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn components_matrix(&self) -> Array2<f64> {
        let d = self.dim();
        Array2::from_shape_fn((2, d), |(r, c)| self.components[r][c])
    }

    /// `y = components * (x - mean)` per row.
    pub fn project(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::shape(format!(
                "PCA fitted on {} dimensions, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        let mean = Array1::from(self.mean.clone());
        let centered = &x - &mean;
        Ok(centered.dot(&self.components_matrix().t()))
    }

    /// `x = mean + components^T y` per row.
    pub fn inverse(&self, y: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if y.ncols() != 2 {
            return Err(Error::shape(format!(
                "PCA inverse expects 2 columns, got {}",
                y.ncols()
            )));
        }
        let mean = Array1::from(self.mean.clone());
        Ok(y.dot(&self.components_matrix()) + &mean)
    }

    pub fn embed(&self, ds: &Dataset) -> Result<Embedding> {
        Embedding::new(self.project(ds.values.view())?, ProjectionSource::Pca)
    }
}

impl ParametricProjection for PcaModel {
    fn project(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        PcaModel::project(self, x).expect("dimension checked by caller")
    }
}

/// Top-2 principal axes of `values` from a symmetric eigendecomposition of
/// the sample covariance. Each component's largest-magnitude entry is made
/// positive.
pub fn pca_fit(values: ArrayView2<'_, f64>) -> Result<PcaModel> {
    let (n, d) = values.dim();
    if n < 3 || d < 2 {
        return Err(Error::invalid(format!(
            "PCA needs at least 3 rows and 2 columns, got {n}x{d}"
        )));
    }
    let mean = values.mean_axis(Axis(0)).expect("non-empty");
    let centered = &values - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let cov = DMatrix::from_fn(d, d, |i, j| 0.5 * (cov[(i, j)] + cov[(j, i)]));
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]];
    if top.is_nan() || top <= 0.0 || top <= 1e-12 * (1.0 + mean.iter().map(|m| m * m).sum::<f64>()) {
        return Err(Error::invalid("PCA input has zero variance (all rows identical)"));
    }

    let component = |k: usize| -> Vec<f64> {
        let col = eig.eigenvectors.column(order[k]);
        let norm = col.norm();
        let mut v: Vec<f64> = col.iter().map(|x| x / norm).collect();
        let pivot = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("d >= 2");
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    Ok(PcaModel {
        mean: mean.to_vec(),
        components: [component(0), component(1)],
        explained_variance: [
            eig.eigenvalues[order[0]].max(0.0),
            eig.eigenvalues[order[1]].max(0.0),
        ],
    })
}

/// Fits PCA on a dataset and returns the model with its embedding.
pub fn pca_embed(ds: &Dataset) -> Result<(PcaModel, Embedding)> {
    let model = pca_fit(ds.values.view())?;
    let emb = model.embed(ds)?;
    Ok((model, emb))
}
