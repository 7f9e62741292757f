//! Learned inverse projections.
//!
//! Given a dataset `D` in `[0,1]^d` and any 2-D projection `P(D)` of it, this
//! crate trains a small fully connected network `B: R^2 -> R^d` that maps
//! screen coordinates back to data space, and builds dense-map analyses on
//! top of it:
//!
//! - [`densemaps::gradient_map`]: central-difference magnitude of `B` per pixel,
//! - [`densemaps::agreement_map`]: how many ensemble classifiers agree on
//!   `B(y)` per pixel,
//! - [`densemaps::roundtrip_map`]: distance between `y` and `P(B(y))` for a
//!   parametric `P` (PCA).
//!
//! Module map:
//!
//! - [`nn`]: dense layers, backpropagation, Adam, dropout, early stopping.
//! - [`data`]: synthetic generators, normalization, splits, CSV.
//! - [`projection`]: PCA and externally computed embeddings.
//! - [`model`]: the inverse-projection model, persistence, grid search.
//! - [`classifiers`]: kNN, logistic regression, Gaussian naive Bayes.
//! - [`metrics`]: MSE/MAE, per-point errors, inference timing.

pub mod classifiers;
pub mod data;
pub mod densemaps;
mod error;
pub mod metrics;
pub mod model;
pub mod nn;
mod par;
pub mod projection;

pub use error::{Error, Result};

use ndarray::{Array2, ArrayView2};

/// Anything that maps 2-D points to d-dimensional instances.
///
/// The trained model implements this; tests plug in analytic stubs.
pub trait InverseProjection: Sync {
    fn output_dim(&self) -> usize;

    /// `points` is `n x 2`; returns `n x output_dim`, row-aligned.
    fn infer_batch(&self, points: ArrayView2<'_, f64>) -> Array2<f64>;
}

impl<T: InverseProjection + ?Sized> InverseProjection for &T {
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }

    fn infer_batch(&self, points: ArrayView2<'_, f64>) -> Array2<f64> {
        (**self).infer_batch(points)
    }
}
