use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

/// HSL to 8-bit RGB. `h` in degrees (any value, wrapped), `s` and `l` in `[0,1]`.
pub fn hsl_to_rgb(h: f64, s: f64, l: f64) -> [u8; 3] {
    let s = s.clamp(0.0, 1.0);
    let l = l.clamp(0.0, 1.0);
    let h = h.rem_euclid(360.0) / 60.0;
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    [to_byte(r + m), to_byte(g + m), to_byte(b + m)]
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Rec. 601 luma.
pub fn luma(rgb: [u8; 3]) -> f64 {
    0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Colormap {
    Grayscale,
    #[default]
    Viridis,
}

// Samples of matplotlib's viridis at t = 0, 1/8, ..., 1.
const VIRIDIS: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 82.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 145.0, 140.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

impl Colormap {
    /// Color for `t` in `[0,1]`; values outside are clamped, NaN maps to 0.
    pub fn color(self, t: f64) -> [u8; 3] {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        match self {
            Colormap::Grayscale => {
                let v = to_byte(t);
                [v, v, v]
            }
            Colormap::Viridis => viridis_table()[(t * 255.0).round() as usize],
        }
    }
}

/// 256-entry viridis table. Per-channel rounding can dip luma by a fraction
/// of a level where red falls while green rises; such entries repeat their
/// predecessor so luma never decreases.
fn viridis_table() -> &'static [[u8; 3]; 256] {
    static TABLE: OnceLock<[[u8; 3]; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = [[0u8; 3]; 256];
        for (k, entry) in table.iter_mut().enumerate() {
            let pos = k as f64 / 255.0 * (VIRIDIS.len() - 1) as f64;
            let s = (pos.floor() as usize).min(VIRIDIS.len() - 2);
            let f = pos - s as f64;
            let (a, b) = (VIRIDIS[s], VIRIDIS[s + 1]);
            for c in 0..3 {
                entry[c] = (a[c] + f * (b[c] - a[c])).round() as u8;
            }
        }
        for k in 1..256 {
            if luma(table[k]) < luma(table[k - 1]) {
                table[k] = table[k - 1];
            }
        }
        table
    })
}

impl fmt::Display for Colormap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Colormap::Grayscale => "grayscale",
            Colormap::Viridis => "viridis",
        })
    }
}

impl FromStr for Colormap {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grayscale" | "greyscale" | "gray" | "grey" => Ok(Colormap::Grayscale),
            "viridis" => Ok(Colormap::Viridis),
            other => Err(crate::Error::invalid(format!("unknown colormap {other:?}"))),
        }
    }
}
