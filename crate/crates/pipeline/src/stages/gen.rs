//! `gen-scenes`: procedural scenes with materials, receivers, sources and a
//! reference receiver per source.

use std::collections::BTreeMap;

use acousmap_core::dataset::{FileRef, SceneRecord};
use acousmap_core::rng::{derive_seed, stream};
use acousmap_core::scene::{
    assign_materials, default_library, gen_grid_scene, gen_line_scene, populate_positions_with, Material, Pattern, Scene,
};
use acousmap_core::Error as CoreError;
use rand::Rng;
use rayon::prelude::*;

use super::write_json;
use crate::config::ScenesConfig;
use crate::error::{PipelineError, Result};
use crate::run::{Ctx, StageOutput};
use crate::store::{SceneFile, SCENE_FILE_VERSION};

pub(crate) fn scene_id(index: usize) -> String {
    format!("scene_{index:04}")
}

fn draw(cfg: &ScenesConfig, library: &[Material], seed: u64) -> std::result::Result<Scene, CoreError> {
    let mut scene = match cfg.pattern {
        Pattern::Line => {
            let n_rooms = stream(seed, &["rooms"]).random_range(cfg.rooms.0..=cfg.rooms.1);
            gen_line_scene(n_rooms, &cfg.size_ranges, cfg.map_area_m, seed)?
        }
        Pattern::Grid => gen_grid_scene(cfg.grid_area_m, cfg.grid_splits, cfg.size_ranges.height, cfg.map_area_m, seed)?,
    };
    scene = assign_materials(&scene, library, derive_seed(seed, &["materials"]))?;
    populate_positions_with(&mut scene, derive_seed(seed, &["positions"]), &cfg.placement);
    Ok(scene)
}

/// Draws scene `index`, redrawing when a draw does not fit the map or has
/// positions off the rasterized scene.
pub(crate) fn generate(index: usize, cfg: &ScenesConfig, master_seed: u64, library: &[Material]) -> Result<SceneFile> {
    let id = scene_id(index);
    let mut last_reason = String::new();
    for attempt in 0..cfg.max_attempts {
        let seed = derive_seed(master_seed, &["scene", &index.to_string(), &attempt.to_string()]);
        let scene = match draw(cfg, library, seed) {
            Ok(s) => s,
            Err(e @ (CoreError::SceneTooLarge { .. } | CoreError::SceneGeneration(_))) => {
                last_reason = e.to_string();
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if scene.sources.is_empty() || scene.receivers.len() < 2 {
            last_reason = "no room fits a receiver".into();
            continue;
        }
        let mut file = SceneFile { version: SCENE_FILE_VERSION, id: id.clone(), scene, references: Vec::new() };
        let floormap = file.floormap(cfg, master_seed)?;
        let off_map = file.scene.receivers.iter().any(|p| {
            floormap.to_pixel(p.x, p.y).is_none_or(|(r, c)| !*floormap.scene_mask.get(r, c))
        });
        if off_map {
            last_reason = "a receiver falls outside the rasterized scene".into();
            continue;
        }
        let n = file.scene.receivers.len();
        file.references = file
            .scene
            .sources
            .iter()
            .map(|&s| {
                let mut rng = stream(seed, &["reference", &s.to_string()]);
                let r = rng.random_range(0..n - 1);
                (s, if r >= s { r + 1 } else { r })
            })
            .collect();
        return Ok(file);
    }
    Err(PipelineError::Invalid(format!("{id}: no valid scene after {} attempts ({last_reason})", cfg.max_attempts)))
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let cfg = &ctx.config.scenes;
    let seed = ctx.config.seed;
    let library = default_library();
    let files: Vec<SceneFile> = (0..cfg.count).into_par_iter().map(|i| generate(i, cfg, seed, &library)).collect::<Result<_>>()?;

    let old: BTreeMap<String, SceneRecord> = ctx.manifest.scenes.drain(..).map(|r| (r.id.clone(), r)).collect();
    let mut records = Vec::with_capacity(files.len());
    for file in &files {
        let rel = format!("scenes/{}.json", file.id);
        write_json(ctx.root, &rel, file)?;
        let scene_ref = FileRef::hash(ctx.root, &rel)?;
        // an identical scene keeps what later stages recorded for it
        let record = match old.get(&file.id) {
            Some(prev) if prev.file("scene").is_some_and(|f| f.sha256 == scene_ref.sha256) => prev.clone(),
            _ => SceneRecord {
                id: file.id.clone(),
                sources: file.scene.sources.clone(),
                num_receivers: file.scene.receivers.len(),
                split: None,
                receiver_split: None,
                files: BTreeMap::from([("scene".to_string(), scene_ref)]),
            },
        };
        records.push(record);
    }
    for (id, prev) in &old {
        if !files.iter().any(|f| &f.id == id) {
            for f in prev.files.values() {
                let _ = std::fs::remove_file(f.resolve(ctx.root));
            }
        }
    }
    ctx.manifest.scenes = records;
    ctx.manifest.master_seed = seed;
    ctx.manifest.task_mode = ctx.config.task_mode;
    log::info!("gen-scenes: {} scenes", files.len());
    Ok(StageOutput::default())
}
