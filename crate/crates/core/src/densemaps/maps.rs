use ndarray::{Array2, ArrayView2, Axis};

use super::color::hsl_to_rgb;
use super::grid::{PixelGrid, RgbMap, ScalarField};
use crate::classifiers::Ensemble;
use crate::data::Dataset;
use crate::metrics::per_point_rmse;
use crate::par;
use crate::projection::{Embedding, Extent, ParametricProjection, PcaModel};
use crate::{Error, InverseProjection, Result};

/// Rough number of points inverse-projected per work unit.
const POINTS_PER_BAND: usize = 8192;

/// Hues in degrees at `(xmin,ymin)`, `(xmax,ymin)`, `(xmin,ymax)`, `(xmax,ymax)`.
pub const CORNER_HUES: [f64; 4] = [0.0, 90.0, 180.0, 270.0];

/// `D(y)` from central differences with steps `w` and `h`.
pub fn gradient_at<B: InverseProjection + ?Sized>(b: &B, y: [f64; 2], w: f64, h: f64) -> f64 {
    let probes = ndarray::arr2(&[
        [y[0] + w, y[1]],
        [y[0] - w, y[1]],
        [y[0], y[1] + h],
        [y[0], y[1] - h],
    ]);
    let out = b.infer_batch(probes.view());
    let mut sq = 0.0;
    for c in 0..out.ncols() {
        let dx = (out[[0, c]] - out[[1, c]]) / (2.0 * w);
        let dy = (out[[2, c]] - out[[3, c]]) / (2.0 * h);
        sq += dx * dx + dy * dy;
    }
    sq.sqrt()
}

/// Gradient magnitude of `b` at every pixel center.
///
/// `b` is evaluated once on the lattice of centers extended by one pixel on
/// each side, so neighbouring pixels share their probes.
pub fn gradient_map<B: InverseProjection + ?Sized>(b: &B, grid: &PixelGrid) -> ScalarField {
    let r = grid.resolution();
    let (w, h) = (grid.pixel_width(), grid.pixel_height());
    let lattice_w = r + 2;
    let band = (POINTS_PER_BAND / lattice_w).max(1);
    let bands = par::map_indexed(r.div_ceil(band), |k| {
        let j0 = k * band;
        let j1 = (j0 + band).min(r);
        // Lattice rows j0-1 ..= j1, columns -1 ..= r.
        let rows = j1 - j0 + 2;
        let pts = Array2::from_shape_fn((rows * lattice_w, 2), |(p, c)| {
            let li = (p % lattice_w) as isize - 1;
            let lj = (p / lattice_w) as isize + j0 as isize - 1;
            grid.center(li, lj)[c]
        });
        let vals = b.infer_batch(pts.view());
        let at = |li: usize, lj: usize| vals.row(lj * lattice_w + li);
        let mut out = Vec::with_capacity((j1 - j0) * r);
        for j in j0..j1 {
            let lj = j - j0 + 1;
            for i in 0..r {
                let li = i + 1;
                let (xp, xm) = (at(li + 1, lj), at(li - 1, lj));
                let (yp, ym) = (at(li, lj + 1), at(li, lj - 1));
                let mut sq = 0.0;
                for c in 0..vals.ncols() {
                    let dx = (xp[c] - xm[c]) / (2.0 * w);
                    let dy = (yp[c] - ym[c]) / (2.0 * h);
                    sq += dx * dx + dy * dy;
                }
                out.push(sq.sqrt());
            }
        }
        out
    });
    ScalarField::new(*grid, bands.concat())
}

/// Inverse-projects every pixel center, in row bands.
fn infer_centers<B, T, F>(b: &B, grid: &PixelGrid, per_band: F) -> Vec<T>
where
    B: InverseProjection + ?Sized,
    T: Send,
    F: Fn(ArrayView2<'_, f64>, ArrayView2<'_, f64>) -> Vec<T> + Sync,
{
    let r = grid.resolution();
    let band = (POINTS_PER_BAND / r).max(1);
    let bands = par::map_indexed(r.div_ceil(band), |k| {
        let j0 = k * band;
        let j1 = (j0 + band).min(r);
        let centers = Array2::from_shape_fn(((j1 - j0) * r, 2), |(p, c)| {
            grid.center((p % r) as isize, (j0 + p / r) as isize)[c]
        });
        let inst = b.infer_batch(centers.view());
        per_band(centers.view(), inst.view())
    });
    bands.into_iter().flatten().collect()
}

/// Color for `v` of `m` members voting for the first class.
pub fn agreement_color(v: usize, m: usize) -> [u8; 3] {
    let a = (2.0 * v as f64 / m as f64 - 1.0).abs();
    if 2 * v == m {
        return [255, 255, 255];
    }
    let hue = if 2 * v > m { 240.0 } else { 0.0 };
    hsl_to_rgb(hue, a, 1.0 - 0.5 * a)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgreementMap {
    pub rgb: RgbMap,
    /// Members voting for the ensemble's first class, per pixel.
    pub votes: Vec<usize>,
    pub members: usize,
}

impl AgreementMap {
    /// `|2v/M - 1|` at storage index `k`.
    pub fn agreement(&self, k: usize) -> f64 {
        (2.0 * self.votes[k] as f64 / self.members as f64 - 1.0).abs()
    }
}

pub fn agreement_map<B: InverseProjection + ?Sized>(
    b: &B,
    ensemble: &Ensemble,
    grid: &PixelGrid,
) -> Result<AgreementMap> {
    if ensemble.dim() != b.output_dim() {
        return Err(Error::shape(format!(
            "ensemble expects {} features, inverse projection yields {}",
            ensemble.dim(),
            b.output_dim()
        )));
    }
    let votes = infer_centers(b, grid, |_, inst| {
        inst.axis_iter(Axis(0)).map(|x| ensemble.vote_one(x)).collect()
    });
    let m = ensemble.len();
    let pixels = votes.iter().flat_map(|&v| agreement_color(v, m)).collect();
    Ok(AgreementMap {
        rgb: RgbMap::new(*grid, pixels),
        votes,
        members: m,
    })
}

/// Bilinear blend of [`CORNER_HUES`] at `(x, y)`, clamped to `extent`.
pub fn reference_hue(extent: &Extent, x: f64, y: f64) -> f64 {
    let (x, y) = extent.clamp(x, y);
    let u = (x - extent.xmin) / extent.width();
    let v = (y - extent.ymin) / extent.height();
    let [h00, h10, h01, h11] = CORNER_HUES;
    (1.0 - u) * (1.0 - v) * h00 + u * (1.0 - v) * h10 + (1.0 - u) * v * h01 + u * v * h11
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundTripMap {
    pub rgb: RgbMap,
    /// Reference hue at each round-trip point `y'`.
    pub hue: Vec<f64>,
    /// `clamp(|y - y'| / diagonal, 0, 1)`.
    pub luminance: Vec<f64>,
}

impl RoundTripMap {
    /// Mean luminance over the given storage indices.
    pub fn mean_luminance(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        for k in indices {
            sum += self.luminance[k];
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Colors each pixel `y` by the reference hue of `y' = P(B(y))`; error
/// `|y - y'|` lifts the lightness towards white.
pub fn roundtrip_map<B, P>(b: &B, p: &P, grid: &PixelGrid) -> RoundTripMap
where
    B: InverseProjection + ?Sized,
    P: ParametricProjection + ?Sized,
{
    let extent = grid.extent();
    let diag = extent.diagonal();
    let pairs = infer_centers(b, grid, |centers, inst| {
        let back = p.project(inst);
        centers
            .rows()
            .into_iter()
            .zip(back.rows())
            .map(|(y, y2)| {
                let hue = reference_hue(&extent, y2[0], y2[1]);
                let dist = ((y[0] - y2[0]).powi(2) + (y[1] - y2[1]).powi(2)).sqrt();
                let lum = if dist.is_nan() { 1.0 } else { (dist / diag).clamp(0.0, 1.0) };
                (hue, lum)
            })
            .collect()
    });
    let pixels = pairs
        .iter()
        .flat_map(|&(hue, lum)| hsl_to_rgb(hue, 1.0, 0.5 + 0.5 * lum))
        .collect();
    let (hue, luminance) = pairs.into_iter().unzip();
    RoundTripMap {
        rgb: RgbMap::new(*grid, pixels),
        hue,
        luminance,
    }
}

/// [`roundtrip_map`] for a model whose projection may not be parametric.
pub fn roundtrip_map_for<B: InverseProjection + ?Sized>(
    b: &B,
    pca: Option<&PcaModel>,
    source: &str,
    grid: &PixelGrid,
) -> Result<RoundTripMap> {
    let pca = pca.ok_or_else(|| Error::NonParametric(source.to_string()))?;
    if pca.dim() != b.output_dim() {
        return Err(Error::shape(format!(
            "PCA fitted on {} dimensions, inverse projection yields {}",
            pca.dim(),
            b.output_dim()
        )));
    }
    Ok(roundtrip_map(b, pca, grid))
}

/// Per-point RMSE between `B(emb)` and the true rows of `ds`.
pub fn validation_map<B: InverseProjection + ?Sized>(
    b: &B,
    ds: &Dataset,
    emb: &Embedding,
) -> Result<Vec<f64>> {
    emb.check_paired(ds)?;
    if ds.dim() != b.output_dim() {
        return Err(Error::shape(format!(
            "dataset has {} columns, inverse projection yields {}",
            ds.dim(),
            b.output_dim()
        )));
    }
    let pred = b.infer_batch(emb.coords.view());
    per_point_rmse(pred.view(), ds.values.view())
}

