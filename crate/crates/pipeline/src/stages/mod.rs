//! Stage bodies. Each reads its inputs through the manifest, writes files
//! under the output root and records them in the manifest.

pub(crate) mod baseline;
pub(crate) mod evaluate;
pub(crate) mod features;
pub(crate) mod gen;
pub(crate) mod golden;
pub(crate) mod labels;
pub(crate) mod params;
pub(crate) mod plot;
pub(crate) mod simulate;
pub(crate) mod split;

use std::path::Path;

use acousmap_core::dataset::{write_atomic, SceneRecord, Split};

use crate::error::Result;
use crate::run::{Ctx, StageOutput};
use crate::stage::Stage;

pub(crate) fn run(stage: Stage, ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    match stage {
        Stage::GenScenes => gen::run(ctx),
        Stage::Split => split::run(ctx),
        Stage::Simulate => simulate::run(ctx),
        Stage::ExtractParams => params::run(ctx),
        Stage::MakeLabels => labels::run(ctx),
        Stage::MakeFeatures => features::run(ctx),
        Stage::Baseline => baseline::run(ctx),
        Stage::Evaluate => evaluate::run(ctx),
        Stage::Plot => plot::run(ctx),
        Stage::ExportGolden => golden::run(ctx),
    }
}

/// Pretty JSON with a trailing newline, written atomically.
pub(crate) fn write_json<T: serde::Serialize>(root: &Path, rel: &str, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(write_atomic(&path, &bytes)?)
}

pub(crate) fn ensure_parent(root: &Path, rel: &str) -> Result<std::path::PathBuf> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(path)
}

/// Scenes scored by evaluation: the test split, or every scene without a
/// split.
pub(crate) fn eval_scenes(records: &[SceneRecord], has_split: bool) -> Vec<&SceneRecord> {
    records.iter().filter(|r| !has_split || r.in_split(Split::Test)).collect()
}
