use serde::{Deserialize, Serialize};

use super::{AcousticHeatmap, ChannelKey};
use crate::{Error, Result};

/// Fewest training values a channel needs for a percentile fit.
pub const MIN_NORMALIZER_SAMPLES: usize = 100;

/// Heatmap pixels are subsampled on this stride (rows and columns) when
/// fitting, to bound memory on large training sets.
pub const NORMALIZER_PIXEL_STRIDE: usize = 4;

/// Linear-interpolation percentile (`q` in [0, 100]) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&q) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Per-channel affine map `y = x · scale + offset` sending the training 5th
/// and 95th percentiles to -1 and +1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamNormalizer {
    pub layout: Vec<ChannelKey>,
    pub scale: Vec<f64>,
    pub offset: Vec<f64>,
}

impl ParamNormalizer {
    /// Fits one channel per entry of `samples` (finite values only).
    pub fn fit(layout: &[ChannelKey], samples: &[Vec<f64>]) -> Result<Self> {
        if layout.len() != samples.len() {
            return Err(Error::ShapeMismatch(format!("{} channels vs {} sample sets", layout.len(), samples.len())));
        }
        let mut scale = Vec::with_capacity(layout.len());
        let mut offset = Vec::with_capacity(layout.len());
        for (key, values) in layout.iter().zip(samples) {
            let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
            if finite.len() < MIN_NORMALIZER_SAMPLES {
                return Err(Error::InvalidArgument(format!(
                    "channel {} has {} samples, need {MIN_NORMALIZER_SAMPLES}",
                    key.label(),
                    finite.len()
                )));
            }
            let p5 = percentile(&finite, 5.0).expect("non-empty");
            let p95 = percentile(&finite, 95.0).expect("non-empty");
            if p95 > p5 {
                let s = 2.0 / (p95 - p5);
                scale.push(s);
                offset.push(-1.0 - p5 * s);
            } else {
                scale.push(1.0);
                offset.push(-p5);
            }
        }
        Ok(Self { layout: layout.to_vec(), scale, offset })
    }

    /// Fits on the valid pixels of training heatmaps, subsampled by
    /// [`NORMALIZER_PIXEL_STRIDE`].
    pub fn fit_heatmaps<'a>(heatmaps: impl IntoIterator<Item = &'a AcousticHeatmap>) -> Result<Self> {
        let mut acc = NormalizerSamples::default();
        for h in heatmaps {
            acc.add(h)?;
        }
        acc.fit()
    }
    pub fn normalize(&self, channel: usize, x: f64) -> f64 {
        x * self.scale[channel] + self.offset[channel]
    }

    pub fn denormalize(&self, channel: usize, y: f64) -> f64 {
        (y - self.offset[channel]) / self.scale[channel]
    }

    fn check(&self, h: &AcousticHeatmap) -> Result<()> {
        if h.layout != self.layout {
            return Err(Error::ShapeMismatch("heatmap layout differs from the normalizer's".into()));
        }
        Ok(())
    }

    pub fn normalize_heatmap(&self, h: &AcousticHeatmap) -> Result<AcousticHeatmap> {
        self.check(h)?;
        let mut out = h.clone();
        for (k, grid) in out.values.iter_mut().enumerate() {
            *grid = grid.map(|&v| self.normalize(k, v as f64) as f32);
        }
        Ok(out)
    }

    pub fn denormalize_heatmap(&self, h: &AcousticHeatmap) -> Result<AcousticHeatmap> {
        self.check(h)?;
        let mut out = h.clone();
        for (k, grid) in out.values.iter_mut().enumerate() {
            *grid = grid.map(|&v| self.denormalize(k, v as f64) as f32);
        }
        Ok(out)
    }
}

/// Streaming collector of subsampled training values, so heatmaps can be
/// dropped after they are seen.
#[derive(Debug, Clone, Default)]
pub struct NormalizerSamples {
    layout: Option<Vec<ChannelKey>>,
    samples: Vec<Vec<f64>>,
}

impl NormalizerSamples {
    pub fn add(&mut self, h: &AcousticHeatmap) -> Result<()> {
        match &self.layout {
            None => {
                self.layout = Some(h.layout.clone());
                self.samples = vec![Vec::new(); h.layout.len()];
            }
            Some(l) if *l != h.layout => {
                return Err(Error::ShapeMismatch("heatmaps with different channel layouts".into()));
            }
            Some(_) => {}
        }
        let (rows, cols) = h.mask.shape();
        for (grid, pool) in h.values.iter().zip(self.samples.iter_mut()) {
            for r in (0..rows).step_by(NORMALIZER_PIXEL_STRIDE) {
                for c in (0..cols).step_by(NORMALIZER_PIXEL_STRIDE) {
                    let v = *grid.get(r, c);
                    if *h.mask.get(r, c) && v.is_finite() {
                        pool.push(v as f64);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn fit(&self) -> Result<ParamNormalizer> {
        let layout = self.layout.as_ref().ok_or(Error::EmptyInput("training heatmaps"))?;
        ParamNormalizer::fit(layout, &self.samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ParamKind;

    fn key() -> ChannelKey {
        ChannelKey { param: ParamKind::T30, band_hz: 1000.0, orientation_deg: None }
    }

    #[test]
    fn percentile_arithmetic() {
        // 0, 0.1, ..., 10: rank 0.05 * 100 = 5 lands exactly on 0.5
        let v: Vec<f64> = (0..=100).map(|i| i as f64 / 10.0).collect();
        assert!((percentile(&v, 5.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((percentile(&v, 95.0).unwrap() - 9.5).abs() < 1e-12);
        assert_eq!(percentile(&[3.0, 1.0], 50.0), Some(2.0));
        assert_eq!(percentile(&[], 50.0), None);
    }

    #[test]
    fn uniform_range_maps_to_unit_interval() {
        let v: Vec<f64> = (0..=100).map(|i| i as f64 / 10.0).collect();
        let n = ParamNormalizer::fit(&[key()], &[v.clone()]).unwrap();
        assert!((n.normalize(0, 0.5) + 1.0).abs() < 1e-12);
        assert!((n.normalize(0, 9.5) - 1.0).abs() < 1e-12);
        let inside = v.iter().filter(|&&x| n.normalize(0, x).abs() < 1.0).count() as f64 / v.len() as f64;
        assert!((0.85..=0.95).contains(&inside), "{inside}");
        for x in v {
            assert!((n.denormalize(0, n.normalize(0, x)) - x).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_channel_uses_the_degenerate_rule() {
        let n = ParamNormalizer::fit(&[key()], &[vec![0.42; 200]]).unwrap();
        assert_eq!(n.scale[0], 1.0);
        assert_eq!(n.offset[0], -0.42);
        assert_eq!(n.normalize(0, 0.42), 0.0);
        assert_eq!(n.denormalize(0, n.normalize(0, 0.42)), 0.42);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        assert!(ParamNormalizer::fit(&[key()], &[vec![1.0; 99]]).is_err());
        assert!(ParamNormalizer::fit(&[key()], &[vec![f64::NAN; 500]]).is_err());
    }
}
