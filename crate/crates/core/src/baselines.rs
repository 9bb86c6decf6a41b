//! The five reference predictors, ordered by how much oracle information
//! they see.
//!
//! RIR baselines extract parameters from a single impulse response (a mean
//! over a random pool, or the input reference) and broadcast them over the
//! scene. Map baselines reuse ground-truth heatmaps of other sources in the
//! same scene. Each predictor's constructor takes exactly the context its
//! kind is allowed to see.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::ParamExtractor;
use crate::grid::Grid;
use crate::heatmap::{directional_channel_values, omni_channel_values, AcousticHeatmap, TaskMode};
use crate::rir::{ChannelLayout, RoomImpulseResponse};
use crate::rng::stream;
use crate::{Error, Result};

/// Largest number of RIRs averaged by [`AvgRir`] and [`SceneAvgRir`].
pub const RIR_POOL_SAMPLES: usize = 500;

/// Largest number of source heatmaps averaged by [`SceneAvgMap`].
pub const MAP_POOL_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaselineKind {
    /// Mean of RIRs drawn from the whole dataset.
    AvgRir,
    /// Mean of RIRs drawn from the evaluated scene.
    SceneAvgRir,
    /// The input reference RIR.
    InputRir,
    /// Ground-truth heatmap of a random other source in the scene.
    SceneRandomMap,
    /// Pixelwise mean of ground-truth heatmaps of other sources in the scene.
    SceneAvgMap,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::AvgRir,
        BaselineKind::SceneAvgRir,
        BaselineKind::InputRir,
        BaselineKind::SceneRandomMap,
        BaselineKind::SceneAvgMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::AvgRir => "AvgRir",
            BaselineKind::SceneAvgRir => "SceneAvgRir",
            BaselineKind::InputRir => "InputRir",
            BaselineKind::SceneRandomMap => "SceneRandomMap",
            BaselineKind::SceneAvgMap => "SceneAvgMap",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    pub fn is_map_baseline(self) -> bool {
        matches!(self, BaselineKind::SceneRandomMap | BaselineKind::SceneAvgMap)
    }
}

/// Random-access RIR collection. Implementors may load or synthesize
/// lazily, so a pool never has to be resident in memory.
pub trait RirSource {
    fn len(&self) -> usize;

    fn load(&self, index: usize) -> Result<RoomImpulseResponse>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RirSource for [RoomImpulseResponse] {
    fn len(&self) -> usize {
        <[RoomImpulseResponse]>::len(self)
    }

    fn load(&self, index: usize) -> Result<RoomImpulseResponse> {
        self.get(index).cloned().ok_or_else(|| Error::InvalidArgument(format!("RIR index {index} out of range")))
    }
}

impl RirSource for Vec<RoomImpulseResponse> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn load(&self, index: usize) -> Result<RoomImpulseResponse> {
        self.as_slice().load(index)
    }
}

/// Sample-wise mean of up to `max_samples` RIRs drawn without replacement.
///
/// Signals are aligned at sample 0 and zero-padded to the longest one. In
/// omni mode only the first channel is kept.
pub fn mean_rir(pool: &dyn RirSource, mode: TaskMode, max_samples: usize, rng: &mut impl Rng) -> Result<RoomImpulseResponse> {
    if pool.is_empty() || max_samples == 0 {
        return Err(Error::EmptyInput("RIR pool"));
    }
    let mut picks = sample(rng, pool.len(), max_samples.min(pool.len())).into_vec();
    picks.sort_unstable();
    let mut sum: Vec<Vec<f64>> = Vec::new();
    let mut sample_rate = 0;
    for &i in &picks {
        let rir = pool.load(i)?;
        let channels = match mode {
            TaskMode::Omni => 1,
            TaskMode::Directional => {
                if rir.layout() != ChannelLayout::Ambisonic2 {
                    return Err(Error::InvalidArgument("directional baselines need ambisonic RIRs".into()));
                }
                rir.num_channels()
            }
        };
        if sum.is_empty() {
            sum = vec![Vec::new(); channels];
            sample_rate = rir.sample_rate();
        } else if rir.sample_rate() != sample_rate {
            return Err(Error::InvalidArgument(format!("mixed sample rates {sample_rate} and {}", rir.sample_rate())));
        }
        for (acc, ch) in sum.iter_mut().zip(rir.channels()) {
            if acc.len() < ch.len() {
                acc.resize(ch.len(), 0.0);
            }
            for (a, &s) in acc.iter_mut().zip(ch) {
                *a += s as f64;
            }
        }
    }
    let len = sum.iter().map(Vec::len).max().unwrap_or(0);
    let n = picks.len() as f64;
    let channels: Vec<Vec<f32>> = sum
        .into_iter()
        .map(|mut acc| {
            acc.resize(len, 0.0);
            acc.into_iter().map(|v| (v / n) as f32).collect()
        })
        .collect();
    let layout = if channels.len() == 1 { ChannelLayout::Mono } else { ChannelLayout::Ambisonic2 };
    RoomImpulseResponse::new(channels, sample_rate, layout)
}

/// Label-layout channel values of one RIR.
pub fn rir_channel_values(rir: &RoomImpulseResponse, mode: TaskMode) -> Result<Vec<f64>> {
    let extractor = ParamExtractor::new(mode.bands_hz(), rir.sample_rate())?;
    match mode {
        TaskMode::Omni => Ok(omni_channel_values(&extractor.extract(&rir.omni_f64())?)),
        TaskMode::Directional => directional_channel_values(rir, &extractor),
    }
}

/// Per-channel constants broadcast over `scene_mask`; NaN outside it.
pub fn broadcast_heatmap(values: &[f64], scene_mask: &Grid<bool>, mode: TaskMode) -> Result<AcousticHeatmap> {
    let layout = mode.layout();
    if values.len() != layout.len() {
        return Err(Error::ShapeMismatch(format!("{} values for {} channels", values.len(), layout.len())));
    }
    let (h, w) = scene_mask.shape();
    let maps = values
        .iter()
        .map(|&v| Grid::from_fn(h, w, |r, c| if *scene_mask.get(r, c) { v as f32 } else { f32::NAN }))
        .collect();
    let channel_valid: Vec<bool> = values.iter().map(|v| v.is_finite()).collect();
    let mask = if channel_valid.iter().any(|&v| v) { scene_mask.clone() } else { Grid::filled(h, w, false) };
    Ok(AcousticHeatmap { values: maps, mask, layout, channel_valid })
}

fn mean_rir_values(pool: &dyn RirSource, mode: TaskMode, seed: u64, tag: &str) -> Result<Vec<f64>> {
    let mut rng = stream(seed, &["baseline", tag]);
    rir_channel_values(&mean_rir(pool, mode, RIR_POOL_SAMPLES, &mut rng)?, mode)
}

/// Parameters of the mean of RIRs sampled across the dataset; the same
/// values for every scene.
#[derive(Debug, Clone, PartialEq)]
pub struct AvgRir {
    mode: TaskMode,
    values: Vec<f64>,
}

impl AvgRir {
    pub fn new(dataset_pool: &dyn RirSource, mode: TaskMode, seed: u64) -> Result<Self> {
        Ok(Self { mode, values: mean_rir_values(dataset_pool, mode, seed, "avg_rir")? })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn predict(&self, scene_mask: &Grid<bool>) -> Result<AcousticHeatmap> {
        broadcast_heatmap(&self.values, scene_mask, self.mode)
    }
}

/// Parameters of the mean of RIRs sampled from one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneAvgRir {
    mode: TaskMode,
    values: Vec<f64>,
}

impl SceneAvgRir {
    /// `scene_key` separates the sampling streams of different scenes.
    pub fn new(scene_pool: &dyn RirSource, mode: TaskMode, seed: u64, scene_key: &str) -> Result<Self> {
        Ok(Self { mode, values: mean_rir_values(scene_pool, mode, seed, &format!("scene_avg_rir/{scene_key}"))? })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn predict(&self, scene_mask: &Grid<bool>) -> Result<AcousticHeatmap> {
        broadcast_heatmap(&self.values, scene_mask, self.mode)
    }
}

/// Parameters of the input reference RIR.
#[derive(Debug, Clone, PartialEq)]
pub struct InputRir {
    mode: TaskMode,
    values: Vec<f64>,
}

impl InputRir {
    pub fn new(reference: &RoomImpulseResponse, mode: TaskMode) -> Result<Self> {
        Ok(Self { mode, values: rir_channel_values(reference, mode)? })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn predict(&self, scene_mask: &Grid<bool>) -> Result<AcousticHeatmap> {
        broadcast_heatmap(&self.values, scene_mask, self.mode)
    }
}

/// Indices a map baseline may draw from; the target is left out when the
/// scene has another source (leakage guard).
fn candidate_sources(count: usize, exclude: Option<usize>) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::EmptyInput("scene heatmaps"));
    }
    let all: Vec<usize> = (0..count).collect();
    match exclude {
        Some(t) if t >= count => Err(Error::InvalidArgument(format!("excluded source {t} of {count}"))),
        Some(t) if count > 1 => Ok(all.into_iter().filter(|&i| i != t).collect()),
        _ => Ok(all),
    }
}

fn check_layouts(heatmaps: &[AcousticHeatmap]) -> Result<()> {
    let first = heatmaps.first().ok_or(Error::EmptyInput("scene heatmaps"))?;
    if heatmaps.iter().any(|h| h.layout != first.layout || h.mask.shape() != first.mask.shape()) {
        return Err(Error::ShapeMismatch("scene heatmaps differ in layout or size".into()));
    }
    Ok(())
}

/// Ground-truth heatmap of a uniformly drawn source in the same scene.
#[derive(Debug, Clone, Copy)]
pub struct SceneRandomMap<'a> {
    scene_labels: &'a [AcousticHeatmap],
}

impl<'a> SceneRandomMap<'a> {
    pub fn new(scene_labels: &'a [AcousticHeatmap]) -> Result<Self> {
        check_layouts(scene_labels)?;
        Ok(Self { scene_labels })
    }

    /// Prediction for source `target`, drawn from the other sources.
    pub fn predict(&self, target: Option<usize>, rng: &mut impl Rng) -> Result<AcousticHeatmap> {
        let candidates = candidate_sources(self.scene_labels.len(), target)?;
        let pick = candidates[rng.random_range(0..candidates.len())];
        Ok(self.scene_labels[pick].clone())
    }
}

/// Pixelwise mean of up to [`MAP_POOL_SAMPLES`] source heatmaps of the
/// scene, drawn without replacement. A pixel is valid only where every
/// averaged heatmap is valid.
#[derive(Debug, Clone, Copy)]
pub struct SceneAvgMap<'a> {
    scene_labels: &'a [AcousticHeatmap],
}

impl<'a> SceneAvgMap<'a> {
    pub fn new(scene_labels: &'a [AcousticHeatmap]) -> Result<Self> {
        check_layouts(scene_labels)?;
        Ok(Self { scene_labels })
    }

    pub fn predict(&self, target: Option<usize>, rng: &mut impl Rng) -> Result<AcousticHeatmap> {
        let candidates = candidate_sources(self.scene_labels.len(), target)?;
        let mut picks: Vec<usize> = if candidates.len() > MAP_POOL_SAMPLES {
            sample(rng, candidates.len(), MAP_POOL_SAMPLES).into_iter().map(|i| candidates[i]).collect()
        } else {
            candidates
        };
        picks.sort_unstable();
        let pool: Vec<&AcousticHeatmap> = picks.iter().map(|&i| &self.scene_labels[i]).collect();
        average_heatmaps(&pool)
    }
}

/// Pixelwise mean with intersected masks; a channel pixel is NaN unless
/// every input is finite there.
pub fn average_heatmaps(pool: &[&AcousticHeatmap]) -> Result<AcousticHeatmap> {
    let first = *pool.first().ok_or(Error::EmptyInput("heatmaps to average"))?;
    let (h, w) = first.mask.shape();
    let n = pool.len() as f64;
    let mut mask = first.mask.clone();
    for other in &pool[1..] {
        for (m, &o) in mask.as_mut_slice().iter_mut().zip(other.mask.as_slice()) {
            *m &= o;
        }
    }
    let values: Vec<Grid<f32>> = (0..first.num_channels())
        .map(|k| {
            Grid::from_fn(h, w, |r, c| {
                let mut sum = 0.0f64;
                for hm in pool {
                    let v = *hm.values[k].get(r, c);
                    if !v.is_finite() {
                        return f32::NAN;
                    }
                    sum += v as f64;
                }
                (sum / n) as f32
            })
        })
        .collect();
    let channel_valid: Vec<bool> = values.iter().map(|g| g.as_slice().iter().any(|v| v.is_finite())).collect();
    if !channel_valid.iter().any(|&v| v) {
        mask = Grid::filled(h, w, false);
    }
    Ok(AcousticHeatmap { values, mask, layout: first.layout.clone(), channel_valid })
}
