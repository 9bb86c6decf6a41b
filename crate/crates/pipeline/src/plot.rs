//! Heatmap rendering to PNG.

use std::io::BufWriter;
use std::path::Path;

use acousmap_core::Grid;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Colour for undefined pixels.
pub const NAN_RGB: [u8; 3] = [128, 128, 128];

// viridis sampled at 0, 1/8, ..., 1
const VIRIDIS: [[f64; 3]; 9] = [
    [68.0, 1.0, 84.0],
    [71.0, 44.0, 122.0],
    [59.0, 81.0, 139.0],
    [44.0, 113.0, 142.0],
    [33.0, 144.0, 141.0],
    [39.0, 173.0, 129.0],
    [92.0, 200.0, 99.0],
    [170.0, 220.0, 50.0],
    [253.0, 231.0, 37.0],
];

/// Value range shared by every image of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
}

impl ColorScale {
    /// Range of the finite values; `None` if there are none.
    pub fn fit<'a>(values: impl IntoIterator<Item = &'a f32>) -> Option<Self> {
        let mut scale: Option<Self> = None;
        for &v in values.into_iter().filter(|v| v.is_finite()) {
            let v = v as f64;
            scale = Some(match scale {
                Some(s) => Self { min: s.min.min(v), max: s.max.max(v) },
                None => Self { min: v, max: v },
            });
        }
        scale
    }

    pub fn color(&self, v: f32) -> [u8; 3] {
        if !v.is_finite() {
            return NAN_RGB;
        }
        let span = self.max - self.min;
        let t = if span > 0.0 { ((v as f64 - self.min) / span).clamp(0.0, 1.0) } else { 0.5 };
        let x = t * (VIRIDIS.len() - 1) as f64;
        let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
        let f = x - i as f64;
        let mut rgb = [0u8; 3];
        for (k, out) in rgb.iter_mut().enumerate() {
            *out = (VIRIDIS[i][k] * (1.0 - f) + VIRIDIS[i + 1][k] * f).round() as u8;
        }
        rgb
    }
}

/// Writes `map` as an 8-bit RGB PNG, row 0 at the top.
pub fn write_png(path: &Path, map: &Grid<f32>, scale: &ColorScale) -> Result<()> {
    let (h, w) = map.shape();
    let mut data = Vec::with_capacity(h * w * 3);
    for &v in map.as_slice() {
        data.extend_from_slice(&scale.color(v));
    }
    let file = std::fs::File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header()?;
    writer.write_image_data(&data)?;
    writer.finish()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_nan() {
        let s = ColorScale { min: 0.0, max: 1.0 };
        assert_eq!(s.color(0.0), [68, 1, 84]);
        assert_eq!(s.color(1.0), [253, 231, 37]);
        assert_eq!(s.color(5.0), [253, 231, 37]);
        assert_eq!(s.color(f32::NAN), NAN_RGB);
        assert_eq!(ColorScale::fit(&[f32::NAN, 2.0, -1.0]), Some(ColorScale { min: -1.0, max: 2.0 }));
        assert_eq!(ColorScale::fit(&[f32::NAN]), None);
    }

    #[test]
    fn png_has_the_map_size() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let g = Grid::from_fn(4, 6, |r, c| (r * c) as f32);
        write_png(&p, &g, &ColorScale { min: 0.0, max: 15.0 }).unwrap();
        let decoder = png::Decoder::new(std::io::BufReader::new(std::fs::File::open(&p).unwrap()));
        let reader = decoder.read_info().unwrap();
        assert_eq!((reader.info().width, reader.info().height), (6, 4));
    }
}
