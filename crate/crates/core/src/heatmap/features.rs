use serde::{Deserialize, Serialize};

use crate::analysis::{MelFrontend, MEL_BINS, MEL_FRAMES};
use crate::grid::{Grid, MAP_SIZE};
use crate::scene::Floormap;
use crate::{Error, Result, SAMPLE_RATE};

/// Width of the soft position marks, in pixels.
pub const POSITION_BLOB_SIGMA_PX: f64 = 2.0;

/// Mel levels are divided by this, so an all-silent RIR maps to -1.
pub const MEL_FEATURE_SCALE_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Gaussian blobs when true, single-pixel marks otherwise.
    pub soft_positions: bool,
    pub blob_sigma_px: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { soft_positions: true, blob_sigma_px: POSITION_BLOB_SIGMA_PX }
    }
}

/// Model input: floormap slices, scene mask, position marks, reference
/// spectrogram and an optional pose line, all 128×128.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    pub channels: Vec<Grid<f32>>,
    pub names: Vec<String>,
    pub source_pixel: (usize, usize),
    pub receiver_pixel: (usize, usize),
}

impl FeatureStack {
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, name: &str) -> Option<&Grid<f32>> {
        self.names.iter().position(|n| n == name).map(|i| &self.channels[i])
    }

    /// Channel-last `H × W × C` buffer.
    pub fn to_hwc(&self) -> Vec<f32> {
        let c = self.channels.len();
        let mut out = vec![0.0f32; MAP_SIZE * MAP_SIZE * c];
        for (k, grid) in self.channels.iter().enumerate() {
            for (p, &v) in grid.as_slice().iter().enumerate() {
                out[p * c + k] = v;
            }
        }
        out
    }
}

fn bool_channel(g: &Grid<bool>) -> Grid<f32> {
    g.map(|&b| b as u8 as f32)
}

/// Signed marks: the source peaks at +1, the reference receiver at -1.
fn position_channel(source: (usize, usize), receiver: (usize, usize), config: &FeatureConfig) -> Grid<f32> {
    if !config.soft_positions {
        let mut g = Grid::filled(MAP_SIZE, MAP_SIZE, 0.0f32);
        g.set(receiver.0, receiver.1, -1.0);
        g.set(source.0, source.1, 1.0);
        return g;
    }
    let s2 = 2.0 * config.blob_sigma_px * config.blob_sigma_px;
    let blob = |p: (usize, usize), r: usize, c: usize| {
        let d2 = (r as f64 - p.0 as f64).powi(2) + (c as f64 - p.1 as f64).powi(2);
        (-d2 / s2).exp()
    };
    Grid::from_fn(MAP_SIZE, MAP_SIZE, |r, c| (blob(source, r, c) - blob(receiver, r, c)).clamp(-1.0, 1.0) as f32)
}

/// Mel matrix as an image: time along columns, frequency rising upward.
fn spectrogram_channel(reference_rir: &[f64]) -> Grid<f32> {
    let mel = MelFrontend::new().compute(reference_rir, SAMPLE_RATE);
    debug_assert_eq!((MEL_FRAMES, MEL_BINS), (MAP_SIZE, MAP_SIZE));
    Grid::from_fn(MAP_SIZE, MAP_SIZE, |r, c| mel.get(c, MEL_BINS - 1 - r) / MEL_FEATURE_SCALE_DB as f32)
}

/// One-pixel line from the map centre to the edge at `angle` (radians,
/// counter-clockwise from east).
fn pose_channel(angle: f64) -> Grid<f32> {
    let mut g = Grid::filled(MAP_SIZE, MAP_SIZE, 0.0f32);
    let center = MAP_SIZE as f64 / 2.0;
    let steps = 4 * MAP_SIZE;
    for i in 0..=steps {
        let t = center * i as f64 / steps as f64;
        let x = center + t * angle.cos();
        let y = center - t * angle.sin();
        let (r, c) = (y.floor(), x.floor());
        if r >= 0.0 && c >= 0.0 && (r as usize) < MAP_SIZE && (c as usize) < MAP_SIZE {
            g.set(r as usize, c as usize, 1.0);
        }
    }
    g
}

/// Builds the input stack for one (reference pair, target source) sample.
///
/// The reference RIR's emitter is also the target source. `reference_rir`
/// is the omni signal at 24 kHz.
pub fn assemble_input_features(
    floormap: &Floormap,
    source: [f64; 2],
    receiver: [f64; 2],
    reference_rir: &[f64],
    pose_angle: Option<f64>,
    config: &FeatureConfig,
) -> Result<FeatureStack> {
    let locate = |[x, y]: [f64; 2]| {
        floormap.to_pixel(x, y).filter(|&(r, c)| *floormap.scene_mask.get(r, c)).ok_or(Error::OutsideScene { x, y })
    };
    let source_pixel = locate(source)?;
    let receiver_pixel = locate(receiver)?;

    let mut channels = Vec::new();
    let mut names = Vec::new();
    for (i, slice) in floormap.slices().enumerate() {
        channels.push(bool_channel(slice));
        names.push(if i == 0 { "floormap".to_string() } else { format!("floormap_{i}") });
    }
    channels.push(bool_channel(&floormap.scene_mask));
    names.push("scene_mask".into());
    channels.push(position_channel(source_pixel, receiver_pixel, config));
    names.push("positions".into());
    channels.push(spectrogram_channel(reference_rir));
    names.push("spectrogram".into());
    if let Some(angle) = pose_angle {
        channels.push(pose_channel(angle));
        names.push("pose".into());
    }
    Ok(FeatureStack { channels, names, source_pixel, receiver_pixel })
}
