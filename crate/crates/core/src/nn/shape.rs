use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Total-neuron budgets explored by the architecture search.
pub const NEURON_LADDER: [usize; 7] = [240, 480, 960, 1920, 3840, 7680, 15360];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Straight,
    Wide,
    Bottleneck,
    FanOut,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [
        ShapeKind::Straight,
        ShapeKind::Wide,
        ShapeKind::Bottleneck,
        ShapeKind::FanOut,
    ];
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ShapeKind::Straight => "straight",
            ShapeKind::Wide => "wide",
            ShapeKind::Bottleneck => "bottleneck",
            ShapeKind::FanOut => "fanout",
        };
        f.write_str(s)
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "straight" => Ok(ShapeKind::Straight),
            "wide" => Ok(ShapeKind::Wide),
            "bottleneck" => Ok(ShapeKind::Bottleneck),
            "fanout" => Ok(ShapeKind::FanOut),
            _ => Err(Error::invalid(format!(
                "unknown shape {s:?} (expected straight, wide, bottleneck or fanout)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkShape {
    pub kind: ShapeKind,
    pub total_neurons: usize,
}

impl NetworkShape {
    pub fn new(kind: ShapeKind, total_neurons: usize) -> Self {
        Self {
            kind,
            total_neurons,
        }
    }

    pub fn hidden_sizes(&self) -> Result<[usize; 4]> {
        expand_shape(*self)
    }
}

/// Expands a shape into its four hidden-layer widths.
///
/// FanOut uses exact doubling `[L, 2L, 4L, 8L]` with `L = round(nu / 15)`.
pub fn expand_shape(shape: NetworkShape) -> Result<[usize; 4]> {
    let nu = shape.total_neurons;
    if nu < 16 {
        return Err(Error::invalid(format!(
            "total neurons must be at least 16, got {nu}"
        )));
    }
    let nu = nu as f64;
    let r = |x: f64| (x.round() as usize).max(1);
    let sizes = match shape.kind {
        ShapeKind::Straight => [r(nu / 4.0); 4],
        ShapeKind::Wide => [r(nu / 6.0), r(nu / 3.0), r(nu / 3.0), r(nu / 6.0)],
        ShapeKind::Bottleneck => [r(nu / 3.0), r(nu / 6.0), r(nu / 6.0), r(nu / 3.0)],
        ShapeKind::FanOut => {
            let l = r(nu / 15.0);
            [l, 2 * l, 4 * l, 8 * l]
        }
    };
    Ok(sizes)
}
