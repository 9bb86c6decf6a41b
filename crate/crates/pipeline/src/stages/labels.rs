//! `make-labels`: dense label heatmaps per source and the normalizer fitted
//! on the training labels.

use std::collections::BTreeMap;

use acousmap_core::dataset::{source_key, write_heatmap, FileRef, SceneRecord, Split};
use acousmap_core::heatmap::{build_label_heatmaps, AcousticHeatmap, NormalizerSamples};
use rayon::prelude::*;

use super::{ensure_parent, write_json};
use crate::error::Result;
use crate::run::{Ctx, StageOutput};
use crate::store::{load_scene, read_tensor_verified, record_tensor};

pub const NORMALIZER_FILE: &str = "normalizer.json";

/// NaN outside the mask, so that the stored tensor alone gives back the mask.
pub(crate) fn clip_to_mask(h: &mut AcousticHeatmap) {
    for g in &mut h.values {
        for (v, &m) in g.as_mut_slice().iter_mut().zip(h.mask.as_slice()) {
            if !m {
                *v = f32::NAN;
            }
        }
    }
}

/// Receivers each label view is built from.
fn views(record: &SceneRecord) -> Vec<(&'static str, Vec<usize>)> {
    match &record.receiver_split {
        Some(p) => vec![("label", p.receivers(Split::Train).to_vec()), ("label_test", p.receivers(Split::Test).to_vec())],
        None => vec![("label", (0..record.num_receivers).collect())],
    }
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let cfg = ctx.config;
    let root = ctx.root;
    let has_split = ctx.manifest.split.is_some();
    let mut samples = NormalizerSamples::default();
    let mut undefined = 0usize;
    for record in ctx.manifest.scenes.iter_mut() {
        let scene = load_scene(root, record)?;
        let floormap = scene.floormap(&cfg.scenes, cfg.seed)?;
        let (params, meta) = read_tensor_verified(root, record, "params", "extract-params")?;
        let &[_, n_rx, c] = params.shape() else {
            unreachable!("params tensors are written with three axes")
        };
        let views = views(record);
        let jobs: Vec<(usize, usize, &str, &[usize])> = record
            .sources
            .iter()
            .enumerate()
            .flat_map(|(si, &s)| views.iter().map(move |(key, rx)| (si, s, *key, rx.as_slice())))
            .collect();
        let built: Vec<(usize, &str, AcousticHeatmap)> = jobs
            .into_par_iter()
            .map(|(si, s, key, receivers)| {
                let points: Vec<[f64; 2]> = receivers.iter().map(|&r| scene.position(r)).collect();
                let values: Vec<Vec<f64>> = receivers
                    .iter()
                    .map(|&r| {
                        let base = (si * n_rx + r) * c;
                        params.data()[base..base + c].iter().map(|&v| v as f64).collect()
                    })
                    .collect();
                let mut h = build_label_heatmaps(&floormap, &points, &values, &meta.layout, &cfg.labels)?;
                clip_to_mask(&mut h);
                Ok((s, key, h))
            })
            .collect::<Result<_>>()?;
        let trains = !has_split || record.in_split(Split::Train);
        for (s, key, h) in built {
            if h.mask.count() == 0 {
                undefined += 1;
            }
            if key == "label" && trains {
                samples.add(&h)?;
            }
            let rel = format!("labels/{}/{key}_{s:04}.amap", record.id);
            let provenance = BTreeMap::from([
                ("scene".to_string(), record.id.clone()),
                ("source".to_string(), s.to_string()),
                ("view".to_string(), key.to_string()),
            ]);
            write_heatmap(&ensure_parent(root, &rel)?, &h, "label", provenance)?;
            record_tensor(root, record, &source_key(key, s), &rel)?;
        }
    }
    if undefined > 0 {
        log::warn!("make-labels: {undefined} label maps have no valid pixel");
    }
    match samples.fit() {
        Ok(normalizer) => {
            write_json(root, NORMALIZER_FILE, &normalizer)?;
            ctx.manifest.normalizer = Some(FileRef::hash(root, NORMALIZER_FILE)?);
        }
        Err(e) => log::warn!("make-labels: no normalizer fitted ({e}); evaluation uses raw units"),
    }
    Ok(StageOutput::default())
}
