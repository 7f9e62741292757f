use crate::projection::{Embedding, Extent};
use crate::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 400;
pub const DEFAULT_MARGIN: f64 = 0.05;

/// An `R x R` raster over a data-space extent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelGrid {
    resolution: usize,
    extent: Extent,
}

impl PixelGrid {
    pub fn new(resolution: usize, extent: Extent) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        if extent.is_degenerate() {
            return Err(Error::invalid(format!(
                "grid extent has zero width or height: {extent:?}"
            )));
        }
        Ok(Self { resolution, extent })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn pixel_width(&self) -> f64 {
        self.extent.width() / self.resolution as f64
    }

    pub fn pixel_height(&self) -> f64 {
        self.extent.height() / self.resolution as f64
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Center of pixel `(i, j)`; also defined for indices just outside the grid.
    pub fn center(&self, i: isize, j: isize) -> [f64; 2] {
        [
            self.extent.xmin + (i as f64 + 0.5) * self.pixel_width(),
            self.extent.ymin + (j as f64 + 0.5) * self.pixel_height(),
        ]
    }

    /// Pixel containing `(x, y)`, if inside the extent.
    pub fn pixel_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.extent.xmin) / self.pixel_width()).floor();
        let fj = ((y - self.extent.ymin) / self.pixel_height()).floor();
        let r = self.resolution as f64;
        (fi >= 0.0 && fi < r && fj >= 0.0 && fj < r).then_some((fi as usize, fj as usize))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    /// All pixel centers in storage order (row `j` major).
    pub fn centers(&self) -> ndarray::Array2<f64> {
        let r = self.resolution;
        ndarray::Array2::from_shape_fn((r * r, 2), |(k, c)| {
            self.center((k % r) as isize, (k / r) as isize)[c]
        })
    }
}

/// Grid over the embedding's bounding box grown by `margin` per side.
pub fn make_grid(emb: &Embedding, resolution: usize, margin: f64) -> Result<PixelGrid> {
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::invalid("margin must be a non-negative fraction"));
    }
    if emb.extent.is_degenerate() {
        return Err(Error::invalid(format!(
            "embedding extent has zero width or height: {:?}",
            emb.extent
        )));
    }
    PixelGrid::new(resolution, emb.extent.expanded(margin))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: PixelGrid,
    /// Row-major, `values[j * R + i]`.
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl ScalarField {
    pub fn new(grid: PixelGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len());
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            grid,
            values,
            min,
            max,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgbMap {
    pub grid: PixelGrid,
    /// Row-major RGB triples, `pixels[3 * (j * R + i)..]`.
    pub pixels: Vec<u8>,
}

impl RgbMap {
    pub fn new(grid: PixelGrid, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), 3 * grid.len());
        Self { grid, pixels }
    }

    pub fn get(&self, i: usize, j: usize) -> [u8; 3] {
        let k = 3 * self.grid.index(i, j);
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }

    /// RGBA bytes with rows flipped so the first row is `ymax`, as canvases expect.
    pub fn to_rgba_top_down(&self, alpha: u8) -> Vec<u8> {
        let r = self.grid.resolution();
        let mut out = Vec::with_capacity(4 * r * r);
        for row in (0..r).rev() {
            for i in 0..r {
                let [a, b, c] = self.get(i, row);
                out.extend_from_slice(&[a, b, c, alpha]);
            }
        }
        out
    }
}
