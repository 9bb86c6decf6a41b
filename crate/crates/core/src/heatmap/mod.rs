//! Acoustic heatmaps: dense per-pixel parameter maps for one source.
//!
//! Sparse receiver measurements are scattered onto the floormap grid,
//! densified with masked average pooling and smoothed with a mask-normalized
//! Gaussian. The same module builds the model input stack, the masked L1
//! loss and the per-channel normalizer.

mod features;
mod labels;
mod loss;
mod normalize;
mod pool;

use serde::{Deserialize, Serialize};

use crate::analysis::{ParamKind, DIRECTIONAL_BANDS_HZ, OMNI_BANDS_HZ};
use crate::ambisonics::fixed_direction_set;
use crate::grid::{Grid, MAP_SIZE};
use crate::{Error, Result};

pub use features::{assemble_input_features, FeatureConfig, FeatureStack, MEL_FEATURE_SCALE_DB, POSITION_BLOB_SIGMA_PX};
pub use labels::{build_label_heatmaps, directional_channel_values, omni_channel_values, LabelConfig};
pub use loss::masked_l1_loss;
pub use normalize::{percentile, NormalizerSamples, ParamNormalizer, MIN_NORMALIZER_SAMPLES, NORMALIZER_PIXEL_STRIDE};
pub use pool::{gaussian_lowpass, masked_average_pool, voronoi_map};

/// Default masked-average-pooling window, in pixels.
pub const POOL_KERNEL: usize = 7;

/// Default Gaussian smoothing width, in pixels.
pub const SMOOTHING_SIGMA_PX: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    /// C50, DRR, T30, EDT at six octave bands.
    Omni,
    /// C50 at three octave bands, beamformed to five fixed azimuths.
    Directional,
}

impl TaskMode {
    pub fn bands_hz(self) -> &'static [f64] {
        match self {
            TaskMode::Omni => &OMNI_BANDS_HZ,
            TaskMode::Directional => &DIRECTIONAL_BANDS_HZ,
        }
    }

    /// Channel order: parameter-major for omni, band-major with orientation
    /// fastest for directional.
    pub fn layout(self) -> Vec<ChannelKey> {
        match self {
            TaskMode::Omni => ParamKind::ALL
                .iter()
                .flat_map(|&param| OMNI_BANDS_HZ.iter().map(move |&band_hz| ChannelKey { param, band_hz, orientation_deg: None }))
                .collect(),
            TaskMode::Directional => DIRECTIONAL_BANDS_HZ
                .iter()
                .flat_map(|&band_hz| {
                    fixed_direction_set().into_iter().map(move |az| ChannelKey {
                        param: ParamKind::C50,
                        band_hz,
                        orientation_deg: Some(az.to_degrees().round()),
                    })
                })
                .collect(),
        }
    }

    pub fn channel_count(self) -> usize {
        match self {
            TaskMode::Omni => ParamKind::ALL.len() * OMNI_BANDS_HZ.len(),
            TaskMode::Directional => DIRECTIONAL_BANDS_HZ.len() * fixed_direction_set().len(),
        }
    }
}

/// What one heatmap channel holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelKey {
    pub param: ParamKind,
    pub band_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_deg: Option<f64>,
}

impl ChannelKey {
    pub fn label(&self) -> String {
        match self.orientation_deg {
            Some(o) => format!("{}@{}Hz/{}deg", self.param.name(), self.band_hz, o),
            None => format!("{}@{}Hz", self.param.name(), self.band_hz),
        }
    }
}

/// Per-channel maps for one source. Pixels outside a channel's own coverage
/// are NaN; `mask` is where every valid channel is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticHeatmap {
    pub values: Vec<Grid<f32>>,
    pub mask: Grid<bool>,
    pub layout: Vec<ChannelKey>,
    /// False for channels without a single defined receiver.
    pub channel_valid: Vec<bool>,
}

impl AcousticHeatmap {
    pub fn num_channels(&self) -> usize {
        self.values.len()
    }

    /// Channel-last `H × W × C` buffer.
    pub fn to_hwc(&self) -> Vec<f32> {
        let c = self.values.len();
        let mut out = vec![0.0f32; MAP_SIZE * MAP_SIZE * c];
        for (k, grid) in self.values.iter().enumerate() {
            for (p, &v) in grid.as_slice().iter().enumerate() {
                out[p * c + k] = v;
            }
        }
        out
    }

    /// Inverse of [`to_hwc`](Self::to_hwc). Channels with no finite pixel are
    /// marked invalid.
    pub fn from_hwc(data: &[f32], mask: Grid<bool>, layout: Vec<ChannelKey>) -> Result<Self> {
        let c = layout.len();
        if data.len() != MAP_SIZE * MAP_SIZE * c || mask.shape() != (MAP_SIZE, MAP_SIZE) {
            return Err(Error::ShapeMismatch(format!(
                "{} values and a {:?} mask for {c} channels of {MAP_SIZE}x{MAP_SIZE}",
                data.len(),
                mask.shape()
            )));
        }
        let values: Vec<Grid<f32>> = (0..c)
            .map(|k| Grid::from_vec(MAP_SIZE, MAP_SIZE, (0..MAP_SIZE * MAP_SIZE).map(|p| data[p * c + k]).collect()))
            .collect();
        let channel_valid = values.iter().map(|g| g.as_slice().iter().any(|v| v.is_finite())).collect();
        Ok(Self { values, mask, layout, channel_valid })
    }

    /// Index of the channel for `(param, band)` (first orientation if any).
    pub fn channel_index(&self, param: ParamKind, band_hz: f64) -> Option<usize> {
        self.layout.iter().position(|k| k.param == param && k.band_hz == band_hz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_have_expected_sizes_and_order() {
        let omni = TaskMode::Omni.layout();
        assert_eq!(omni.len(), 24);
        assert_eq!(TaskMode::Omni.channel_count(), 24);
        assert_eq!(omni[0].param, ParamKind::C50);
        assert_eq!(omni[5].band_hz, 4000.0);
        assert_eq!(omni[6].param, ParamKind::Drr);
        assert_eq!(omni[23].param, ParamKind::Edt);

        let dir = TaskMode::Directional.layout();
        assert_eq!(dir.len(), 15);
        assert_eq!(TaskMode::Directional.channel_count(), 15);
        assert!(dir.iter().all(|k| k.param == ParamKind::C50));
        assert_eq!(dir[0].orientation_deg, Some(0.0));
        assert_eq!(dir[1].orientation_deg, Some(72.0));
        assert_eq!(dir[5].band_hz, 1000.0);
    }

    #[test]
    fn layout_round_trips_through_json() {
        for mode in [TaskMode::Omni, TaskMode::Directional] {
            let layout = mode.layout();
            let back: Vec<ChannelKey> = serde_json::from_str(&serde_json::to_string(&layout).unwrap()).unwrap();
            assert_eq!(back, layout);
        }
    }

    #[test]
    fn hwc_round_trip() {
        let layout = TaskMode::Directional.layout();
        let values: Vec<Grid<f32>> =
            (0..15).map(|k| Grid::from_fn(MAP_SIZE, MAP_SIZE, |r, c| (r * 1000 + c * 10 + k) as f32)).collect();
        let h = AcousticHeatmap {
            values,
            mask: Grid::filled(MAP_SIZE, MAP_SIZE, true),
            layout: layout.clone(),
            channel_valid: vec![true; 15],
        };
        let hwc = h.to_hwc();
        assert_eq!(hwc[15 * 3 + 2], 32.0);
        let back = AcousticHeatmap::from_hwc(&hwc, h.mask.clone(), layout).unwrap();
        assert_eq!(back, h);
    }
}
