//! `baseline`: predictions of the reference predictors for every source of
//! every scene.

use std::collections::BTreeMap;

use acousmap_core::baselines::{AvgRir, BaselineKind, InputRir, SceneAvgMap, SceneAvgRir, SceneRandomMap};
use acousmap_core::dataset::{source_key, write_heatmap, SceneRecord, Split};
use acousmap_core::heatmap::AcousticHeatmap;
use acousmap_core::rng::stream;
use rayon::prelude::*;

use super::ensure_parent;
use crate::error::Result;
use crate::run::{Ctx, StageOutput};
use crate::store::{load_scene, read_heatmap_verified, read_reference, record_tensor, DatasetPool, ScenePool, SceneRirs};

pub(crate) fn prediction_key(kind: &str, source: usize) -> String {
    source_key(&format!("baseline/{kind}"), source)
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let cfg = ctx.config;
    let root = ctx.root;
    let mode = cfg.task_mode;
    let kinds = &cfg.baselines.kinds;
    let has_split = ctx.manifest.split.is_some();

    let avg_rir = if kinds.contains(&BaselineKind::AvgRir) {
        let pool_scenes: Vec<SceneRecord> =
            ctx.manifest.scenes.iter().filter(|r| !has_split || r.in_split(Split::Train)).cloned().collect();
        let pool = DatasetPool::new(root, pool_scenes);
        log::info!("baseline: AvgRir over a pool of {} pairs", acousmap_core::baselines::RirSource::len(&pool));
        Some(AvgRir::new(&pool, mode, cfg.seed)?)
    } else {
        None
    };

    for record in ctx.manifest.scenes.iter_mut() {
        let scene = load_scene(root, record)?;
        let scene_mask = scene.floormap(&cfg.scenes, cfg.seed)?.scene_mask;
        let scene_avg = if kinds.contains(&BaselineKind::SceneAvgRir) {
            let rirs = SceneRirs::open(root, record)?;
            Some(SceneAvgRir::new(&ScenePool::new(&rirs, record), mode, cfg.seed, &record.id)?)
        } else {
            None
        };
        let labels: Vec<AcousticHeatmap> = if kinds.iter().any(|k| k.is_map_baseline()) {
            record
                .sources
                .iter()
                .map(|&s| read_heatmap_verified(root, record, &source_key("label", s), "make-labels"))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        let record_ro = &*record;
        let jobs: Vec<(usize, usize, BaselineKind)> =
            record.sources.iter().enumerate().flat_map(|(i, &s)| kinds.iter().map(move |&k| (i, s, k))).collect();
        let written: Vec<(BaselineKind, usize, String)> = jobs
            .into_par_iter()
            .map(|(i, s, kind)| {
                let mut rng = stream(cfg.seed, &["baseline", kind.name(), &record_ro.id, &s.to_string()]);
                let pred = match kind {
                    BaselineKind::AvgRir => avg_rir.as_ref().expect("built above").predict(&scene_mask)?,
                    BaselineKind::SceneAvgRir => scene_avg.as_ref().expect("built above").predict(&scene_mask)?,
                    BaselineKind::InputRir => InputRir::new(&read_reference(root, record_ro, s)?, mode)?.predict(&scene_mask)?,
                    BaselineKind::SceneRandomMap => SceneRandomMap::new(&labels)?.predict(Some(i), &mut rng)?,
                    BaselineKind::SceneAvgMap => SceneAvgMap::new(&labels)?.predict(Some(i), &mut rng)?,
                };
                let rel = format!("baselines/{}/{}/src_{s:04}.amap", kind.name(), record_ro.id);
                let provenance = BTreeMap::from([
                    ("model".to_string(), kind.name().to_string()),
                    ("scene".to_string(), record_ro.id.clone()),
                    ("source".to_string(), s.to_string()),
                ]);
                write_heatmap(&ensure_parent(root, &rel)?, &pred, "prediction", provenance)?;
                Ok((kind, s, rel))
            })
            .collect::<Result<_>>()?;
        for (kind, s, rel) in written {
            record_tensor(root, record, &prediction_key(kind.name(), s), &rel)?;
        }
    }
    Ok(StageOutput::default())
}
