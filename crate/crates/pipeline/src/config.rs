//! Versioned JSON pipeline configuration.
//!
//! A config file only needs the keys it changes; everything else takes the
//! defaults below. Command-line `--set path.to.key=value` overrides are
//! applied on top of the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use acousmap_core::baselines::BaselineKind;
use acousmap_core::dataset::SplitMode;
use acousmap_core::eval::EvalConfig;
use acousmap_core::heatmap::{FeatureConfig, LabelConfig, TaskMode};
use acousmap_core::scene::{Pattern, PlacementConfig, SizeRanges, SliceMode};
use acousmap_core::sim::SimConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PipelineError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub task_mode: TaskMode,
    pub scenes: ScenesConfig,
    /// Ignores `layout` and `rng_seed`, which follow the task mode and seed.
    pub simulation: SimConfig,
    /// `None` evaluates on every scene.
    pub split: Option<SplitMode>,
    pub labels: LabelConfig,
    pub features: FeaturesConfig,
    pub baselines: BaselinesConfig,
    pub evaluate: EvaluateConfig,
    pub plot: PlotConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            task_mode: TaskMode::Omni,
            scenes: ScenesConfig::default(),
            simulation: SimConfig::default(),
            split: Some(SplitMode::Scene { train_fraction: 0.8 }),
            labels: LabelConfig::default(),
            features: FeaturesConfig::default(),
            baselines: BaselinesConfig::default(),
            evaluate: EvaluateConfig::default(),
            plot: PlotConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenesConfig {
    pub count: usize,
    pub pattern: Pattern,
    /// Inclusive room-count range for line scenes.
    pub rooms: (usize, usize),
    pub size_ranges: SizeRanges,
    /// Rectangle and cell counts for grid scenes.
    pub grid_area_m: (f64, f64),
    pub grid_splits: (usize, usize),
    pub map_area_m: f64,
    pub placement: PlacementConfig,
    pub slice_mode: SliceMode,
    /// Redraws per scene when a draw does not fit the map.
    pub max_attempts: usize,
}

impl Default for ScenesConfig {
    fn default() -> Self {
        Self {
            count: 10,
            pattern: Pattern::Line,
            rooms: (3, 3),
            size_ranges: SizeRanges { width: (2.5, 3.3), depth: (2.5, 5.0), height: (2.4, 3.5) },
            grid_area_m: (8.0, 8.0),
            grid_splits: (2, 2),
            map_area_m: 10.0,
            placement: PlacementConfig { sources_per_room: 1, ..Default::default() },
            slice_mode: SliceMode::Center,
            max_attempts: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturesConfig {
    #[serde(flatten)]
    pub stack: FeatureConfig,
    /// Adds a pose channel at this azimuth, in degrees.
    pub pose_deg: Option<f64>,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self { stack: FeatureConfig::default(), pose_deg: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselinesConfig {
    pub kinds: Vec<BaselineKind>,
}

impl Default for BaselinesConfig {
    fn default() -> Self {
        Self { kinds: BaselineKind::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluateConfig {
    #[serde(flatten)]
    pub metrics: EvalConfig,
    /// Upper bounds on mean errors, keyed `PARAM` or `MODEL.PARAM`. Units
    /// are dB for C50/DRR and a fraction for T30/EDT.
    pub max_error: BTreeMap<String, f64>,
    /// Extra prediction sets `name → directory` holding
    /// `<scene>/src_<source>.amap` files, e.g. from a trained model.
    pub predictions: BTreeMap<String, PathBuf>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self { metrics: EvalConfig::default(), max_error: BTreeMap::new(), predictions: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    /// Number of evaluation samples to draw.
    pub max_samples: usize,
    /// Channel labels such as `C50@1000Hz`; empty means every channel.
    pub channels: Vec<String>,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self { max_samples: 2, channels: Vec::new() }
    }
}

/// Recursively overlays `patch` onto `base`.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Sets `a.b.c` in a JSON tree. The value is parsed as JSON when possible
/// and taken as a string otherwise.
fn set_path(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| PipelineError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| PipelineError::Config(format!("`{}` is not an object", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

impl PipelineConfig {
    /// Defaults, then the optional file, then `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut tree = serde_json::to_value(Self::default())?;
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            let file: Value = serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            merge(&mut tree, file);
        }
        for o in overrides {
            set_path(&mut tree, o)?;
        }
        let config: Self = serde_json::from_value(tree).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(PipelineError::Config(format!("config version {} is not {CONFIG_VERSION}", self.version)));
        }
        let (lo, hi) = self.scenes.rooms;
        if lo < 2 || hi < lo {
            return Err(PipelineError::Config(format!("room range ({lo}, {hi}) must satisfy 2 <= min <= max")));
        }
        if self.scenes.count == 0 {
            return Err(PipelineError::Config("scene count is zero".into()));
        }
        if self.scenes.max_attempts == 0 {
            return Err(PipelineError::Config("max_attempts is zero".into()));
        }
        self.scenes.placement.validate()?;
        self.simulation.validate()?;
        Ok(())
    }

    /// Canonical JSON form of the config, used for hashing.
    pub fn canonical_json(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = PipelineConfig::default();
        let back: PipelineConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn file_then_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"seed": 3, "scenes": {"count": 4}}"#).unwrap();
        let c = PipelineConfig::load(Some(&p), &["scenes.count=6".into(), "task_mode=directional".into()]).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.scenes.count, 6);
        assert_eq!(c.task_mode, TaskMode::Directional);
        assert_eq!(c.scenes.map_area_m, 10.0);
        let c = PipelineConfig::load(None, &["split=null".into()]).unwrap();
        assert_eq!(c.split, None);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(PipelineConfig::load(None, &["scenes.unknown=1".into()]).is_err());
        assert!(PipelineConfig::load(None, &["version=2".into()]).is_err());
        assert!(PipelineConfig::load(None, &["noequals".into()]).is_err());
        assert!(PipelineConfig::load(None, &["scenes.rooms=[1,1]".into()]).is_err());
    }
}
