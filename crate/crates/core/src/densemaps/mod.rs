//! Dense maps: per-pixel functions of the inverse projection over a raster
//! covering the embedding.
//!
//! Pixel `(i, j)` has column `i` (x) and row `j` (y), with `j = 0` at
//! `ymin`. Exported images flip rows so the top of the file is `ymax`.

mod color;
mod export;
mod grid;
mod hull;
mod maps;

pub use color::{hsl_to_rgb, luma, Colormap};
pub use export::{
    export_ppm, read_ppm_header, render, write_ppm, write_range_legend, PpmHeader,
};
pub use grid::{make_grid, PixelGrid, RgbMap, ScalarField, DEFAULT_MARGIN, DEFAULT_RESOLUTION};
pub use hull::ConvexHull;
pub use maps::{
    agreement_color, agreement_map, gradient_at, gradient_map, reference_hue, roundtrip_map,
    roundtrip_map_for, validation_map, AgreementMap, RoundTripMap, CORNER_HUES,
};
