use serde::{Deserialize, Serialize};

use super::pool::{gaussian_lowpass, masked_average_pool};
use super::{AcousticHeatmap, ChannelKey, POOL_KERNEL, SMOOTHING_SIGMA_PX};
use crate::ambisonics::{fixed_direction_set, maxre_beamform};
use crate::analysis::{AcousticParams, ParamExtractor, ParamKind};
use crate::grid::{Grid, MAP_SIZE};
use crate::rir::RoomImpulseResponse;
use crate::scene::Floormap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    pub pool_kernel: usize,
    pub sigma_px: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self { pool_kernel: POOL_KERNEL, sigma_px: SMOOTHING_SIGMA_PX }
    }
}

/// Omni label values in [`TaskMode::Omni`](super::TaskMode) order; NaN where undefined.
pub fn omni_channel_values(params: &AcousticParams) -> Vec<f64> {
    ParamKind::ALL
        .iter()
        .flat_map(|&kind| params.values(kind).iter().map(|v| v.unwrap_or(f64::NAN)))
        .collect()
}

/// Directional label values: C50 per band of the RIR beamformed to each
/// fixed azimuth, band-major with orientation fastest.
pub fn directional_channel_values(rir: &RoomImpulseResponse, extractor: &ParamExtractor) -> Result<Vec<f64>> {
    let directions = fixed_direction_set();
    let per_direction: Vec<Vec<Option<f64>>> = directions
        .iter()
        .map(|&az| extractor.extract_c50(&maxre_beamform(rir, az)?))
        .collect::<Result<_>>()?;
    let bands = extractor.bands_hz().len();
    Ok((0..bands)
        .flat_map(|b| per_direction.iter().map(move |d| d[b].unwrap_or(f64::NAN)))
        .collect())
}

/// Dense label maps from per-receiver values.
///
/// `points` are world coordinates and `values[i]` holds one value per
/// channel of `layout` (NaN = undefined). Each channel is scattered, pooled,
/// clipped to the scene mask and smoothed.
pub fn build_label_heatmaps(
    floormap: &Floormap,
    points: &[[f64; 2]],
    values: &[Vec<f64>],
    layout: &[ChannelKey],
    config: &LabelConfig,
) -> Result<AcousticHeatmap> {
    if points.len() != values.len() {
        return Err(Error::ShapeMismatch(format!("{} points vs {} value rows", points.len(), values.len())));
    }
    if let Some(row) = values.iter().find(|v| v.len() != layout.len()) {
        return Err(Error::ShapeMismatch(format!("{} values for {} channels", row.len(), layout.len())));
    }
    let pixels: Vec<(usize, usize)> = points
        .iter()
        .map(|&[x, y]| {
            floormap
                .to_pixel(x, y)
                .filter(|&(r, c)| *floormap.scene_mask.get(r, c))
                .ok_or(Error::OutsideScene { x, y })
        })
        .collect::<Result<_>>()?;

    let mut maps = Vec::with_capacity(layout.len());
    let mut channel_valid = Vec::with_capacity(layout.len());
    let mut mask = floormap.scene_mask.clone();
    for ch in 0..layout.len() {
        // receivers sharing a pixel are averaged
        let mut sum = Grid::filled(MAP_SIZE, MAP_SIZE, 0.0f64);
        let mut count = Grid::filled(MAP_SIZE, MAP_SIZE, 0u32);
        for (&(r, c), row) in pixels.iter().zip(values) {
            if row[ch].is_finite() {
                *sum.get_mut(r, c) += row[ch];
                *count.get_mut(r, c) += 1;
            }
        }
        let active = count.map(|&n| n > 0);
        if active.count() == 0 {
            log::debug!("channel {} has no defined receiver", layout[ch].label());
            maps.push(Grid::filled(MAP_SIZE, MAP_SIZE, f32::NAN));
            channel_valid.push(false);
            continue;
        }
        let sparse = Grid::from_fn(MAP_SIZE, MAP_SIZE, |r, c| {
            let n = *count.get(r, c);
            if n > 0 { sum.get(r, c) / n as f64 } else { 0.0 }
        });
        let (pooled, coverage) = masked_average_pool(&sparse, &active, config.pool_kernel)?;
        let valid = Grid::from_fn(MAP_SIZE, MAP_SIZE, |r, c| *coverage.get(r, c) && *floormap.scene_mask.get(r, c));
        let smooth = gaussian_lowpass(&pooled, &valid, config.sigma_px)?;
        for (m, &v) in mask.as_mut_slice().iter_mut().zip(valid.as_slice()) {
            *m &= v;
        }
        maps.push(smooth.map(|&v| v as f32));
        channel_valid.push(true);
    }
    if !channel_valid.iter().any(|&v| v) {
        mask = Grid::filled(MAP_SIZE, MAP_SIZE, false);
    }
    Ok(AcousticHeatmap { values: maps, mask, layout: layout.to_vec(), channel_valid })
}
