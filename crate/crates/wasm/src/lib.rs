//! wasm-bindgen surface for the static demo in `www/`.
//!
//! [`Explorer`] trains a small inverse projection on a synthetic dataset and
//! answers point queries and dense-map renders as RGBA buffers ready for
//! `ImageData`.

use ndarray::Array2;
use unproject::classifiers::{select_classes, Ensemble};
use unproject::data::{generate_blobs, generate_swiss_roll, normalize, Dataset};
use unproject::densemaps::{agreement_map, gradient_map, render, roundtrip_map, Colormap, PixelGrid};
use unproject::model::{fit, NNInvModel};
use unproject::nn::{NetworkShape, ShapeKind, TrainConfig};
use unproject::projection::{pca_embed, Embedding, PcaModel};
use unproject::{Error, Result};
use wasm_bindgen::prelude::*;

const MARGIN: f64 = 0.05;
const MAX_RESOLUTION: usize = 1024;
const MAX_POINTS: usize = 5000;

pub struct Core {
    data: Dataset,
    embedding: Embedding,
    pca: PcaModel,
    model: NNInvModel,
    grid_extent: unproject::projection::Extent,
}

impl Core {
    /// `kind` is `blobs` (8-D, 4 clusters) or `swissroll`.
    pub fn train(kind: &str, n: usize, seed: u64, max_epochs: usize) -> Result<Self> {
        if !(20..=MAX_POINTS).contains(&n) {
            return Err(Error::InvalidArgument(format!("n must be in 20..={MAX_POINTS}")));
        }
        let raw = match kind {
            "blobs" => generate_blobs(n, 8, 4, 1.0, seed)?,
            "swissroll" => generate_swiss_roll(n, seed)?.dataset,
            other => return Err(Error::InvalidArgument(format!("unknown dataset {other:?}"))),
        };
        let data = normalize(&raw);
        let (pca, embedding) = pca_embed(&data)?;
        let mut cfg = TrainConfig::for_shape(NetworkShape::new(ShapeKind::Straight, 240), data.dim())?;
        cfg.max_epochs = max_epochs;
        cfg.seed = seed;
        let model = fit(&data, &embedding, &cfg)?;
        let grid_extent = model.input_extent.expanded(MARGIN);
        Ok(Self {
            data,
            embedding,
            pca,
            model,
            grid_extent,
        })
    }

    fn grid(&self, resolution: usize) -> Result<PixelGrid> {
        if resolution > MAX_RESOLUTION {
            return Err(Error::InvalidArgument(format!("resolution above {MAX_RESOLUTION}")));
        }
        PixelGrid::new(resolution, self.grid_extent)
    }

    /// Map extent `[xmin, xmax, ymin, ymax]`.
    pub fn extent(&self) -> Vec<f64> {
        self.grid_extent.as_array().to_vec()
    }

    pub fn points(&self) -> Vec<f64> {
        self.embedding.coords.iter().copied().collect()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.data.labels.clone().unwrap_or_default()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn infer(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        let out = self.model.infer(Array2::from_shape_vec((1, 2), vec![x, y]).expect("1x2").view())?;
        Ok(out.into_raw_vec_and_offset().0)
    }

    pub fn gradient_rgba(&self, resolution: usize) -> Result<Vec<u8>> {
        let field = gradient_map(&self.model, &self.grid(resolution)?);
        Ok(render(&field, Colormap::Viridis).to_rgba_top_down(255))
    }

    pub fn agreement_rgba(&self, resolution: usize, a: u32, b: u32) -> Result<Vec<u8>> {
        let labels = self.data.labels.as_deref().unwrap_or_default();
        let (x, y) = select_classes(self.data.values.view(), labels, a, b);
        let ensemble = Ensemble::fit_default(x.view(), &y)?;
        Ok(agreement_map(&self.model, &ensemble, &self.grid(resolution)?)?
            .rgb
            .to_rgba_top_down(255))
    }

    pub fn roundtrip_rgba(&self, resolution: usize) -> Result<Vec<u8>> {
        Ok(roundtrip_map(&self.model, &self.pca, &self.grid(resolution)?)
            .rgb
            .to_rgba_top_down(255))
    }
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Explorer(Core);

#[wasm_bindgen]
impl Explorer {
    #[wasm_bindgen(constructor)]
    pub fn new(kind: &str, n: usize, seed: u32, max_epochs: usize) -> std::result::Result<Explorer, JsError> {
        Core::train(kind, n, seed.into(), max_epochs).map(Explorer).map_err(js)
    }

    pub fn extent(&self) -> Vec<f64> {
        self.0.extent()
    }

    /// Flat `[x0, y0, x1, y1, ...]`.
    pub fn points(&self) -> Vec<f64> {
        self.0.points()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.0.labels()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn infer(&self, x: f64, y: f64) -> std::result::Result<Vec<f64>, JsError> {
        self.0.infer(x, y).map_err(js)
    }

    pub fn gradient_map(&self, resolution: usize) -> std::result::Result<Vec<u8>, JsError> {
        self.0.gradient_rgba(resolution).map_err(js)
    }

    pub fn agreement_map(&self, resolution: usize, a: u32, b: u32) -> std::result::Result<Vec<u8>, JsError> {
        self.0.agreement_rgba(resolution, a, b).map_err(js)
    }

    pub fn roundtrip_map(&self, resolution: usize) -> std::result::Result<Vec<u8>, JsError> {
        self.0.roundtrip_rgba(resolution).map_err(js)
    }
}
