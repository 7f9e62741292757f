use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::color::Colormap;
use super::grid::{RgbMap, ScalarField};
use crate::{Error, Result};

/// Renders a scalar field after min-max normalization over the image.
/// A constant field renders at the bottom of the colormap.
pub fn render(field: &ScalarField, cmap: Colormap) -> RgbMap {
    let span = field.max - field.min;
    let pixels = field
        .values
        .iter()
        .flat_map(|&v| {
            let t = if span > 0.0 { (v - field.min) / span } else { 0.0 };
            cmap.color(t)
        })
        .collect();
    RgbMap::new(field.grid, pixels)
}

/// Binary PPM; the first written row is the grid's top (max-y) row.
pub fn write_ppm<W: Write>(map: &RgbMap, mut w: W) -> std::io::Result<()> {
    let r = map.grid.resolution();
    write!(w, "P6\n{r} {r}\n255\n")?;
    for j in (0..r).rev() {
        let start = 3 * map.grid.index(0, j);
        w.write_all(&map.pixels[start..start + 3 * r])?;
    }
    w.flush()
}

pub fn export_ppm(map: &RgbMap, path: impl AsRef<Path>) -> Result<()> {
    write_ppm(map, BufWriter::new(File::create(path)?))?;
    Ok(())
}

/// Writes `min` and `max` of the field with two decimals.
pub fn write_range_legend(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format!("min {:.2}\nmax {:.2}\n", field.min, field.max))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PpmHeader {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    /// Byte offset of the first pixel.
    pub data_offset: usize,
}

/// Parses a P6 header (comments not supported).
pub fn read_ppm_header(bytes: &[u8]) -> Result<PpmHeader> {
    let bad = |m: &str| Error::invalid(format!("not a binary PPM: {m}"));
    if !bytes.starts_with(b"P6") {
        return Err(bad("missing P6 magic"));
    }
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for f in &mut fields {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header number out of range"))?;
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("no separator after header"));
    }
    Ok(PpmHeader {
        width: fields[0] as usize,
        height: fields[1] as usize,
        maxval: fields[2] as u32,
        data_offset: pos + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemaps::PixelGrid;
    use crate::projection::Extent;

    fn grid(r: usize) -> PixelGrid {
        PixelGrid::new(r, Extent::new(0.0, 1.0, 0.0, 1.0)).unwrap()
    }

    #[test]
    fn black_two_by_two() {
        let map = RgbMap::new(grid(2), vec![0; 12]);
        let mut buf = Vec::new();
        write_ppm(&map, &mut buf).unwrap();
        let header = b"P6\n2 2\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(&buf[header.len()..], &[0u8; 12]);
    }

    #[test]
    fn top_row_is_max_y() {
        let g = grid(2);
        let mut pixels = vec![0u8; 12];
        // Pixel (0, 1) is the top-left one.
        pixels[3 * g.index(0, 1)] = 200;
        let mut buf = Vec::new();
        write_ppm(&RgbMap::new(g, pixels), &mut buf).unwrap();
        let h = read_ppm_header(&buf).unwrap();
        assert_eq!(buf[h.data_offset], 200);
        assert_eq!(buf[h.data_offset + 6], 0);
    }

    #[test]
    fn header_round_trip() {
        for r in [2, 7, 400] {
            let map = RgbMap::new(grid(r), vec![9; 3 * r * r]);
            let mut buf = Vec::new();
            write_ppm(&map, &mut buf).unwrap();
            let h = read_ppm_header(&buf).unwrap();
            assert_eq!((h.width, h.height, h.maxval), (r, r, 255));
            assert_eq!(buf.len() - h.data_offset, 3 * r * r);
        }
        assert!(read_ppm_header(b"P5\n2 2\n255\n").is_err());
        assert!(read_ppm_header(b"P6\n2").is_err());
    }

    #[test]
    fn render_normalizes_per_image() {
        let f = ScalarField::new(grid(2), vec![1.0, 2.0, 3.0, 5.0]);
        let img = render(&f, Colormap::Grayscale);
        assert_eq!(img.get(0, 0), [0, 0, 0]);
        assert_eq!(img.get(1, 1), [255, 255, 255]);
        let flat = ScalarField::new(grid(2), vec![4.0; 4]);
        assert!(render(&flat, Colormap::Grayscale).pixels.iter().all(|&b| b == 0));
    }

    #[test]
    fn legend_has_two_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        write_range_legend(&ScalarField::new(grid(2), vec![0.0, 0.125, 1.0, 2.5]), &p).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "min 0.00\nmax 2.50\n");
    }
}
