//! `make-features`: model input stacks, one per source.

use std::collections::BTreeMap;

use acousmap_core::dataset::{source_key, write_tensor, Tensor, TensorMeta};
use acousmap_core::heatmap::assemble_input_features;
use acousmap_core::{MAP_SIZE, SAMPLE_RATE};
use rayon::prelude::*;

use super::ensure_parent;
use crate::error::{PipelineError, Result};
use crate::run::{Ctx, StageOutput};
use crate::store::{load_scene, read_reference, record_tensor};

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let cfg = ctx.config;
    let root = ctx.root;
    let pose = cfg.features.pose_deg.map(f64::to_radians);
    for record in ctx.manifest.scenes.iter_mut() {
        let scene = load_scene(root, record)?;
        let floormap = scene.floormap(&cfg.scenes, cfg.seed)?;
        let record_ro = &*record;
        let written: Vec<(usize, String)> = scene
            .references
            .par_iter()
            .map(|&(s, r)| {
                let rir = read_reference(root, record_ro, s)?;
                if rir.sample_rate() != SAMPLE_RATE {
                    return Err(PipelineError::Invalid(format!(
                        "spectrogram features need {SAMPLE_RATE} Hz RIRs, got {} Hz",
                        rir.sample_rate()
                    )));
                }
                let stack =
                    assemble_input_features(&floormap, scene.position(s), scene.position(r), &rir.omni_f64(), pose, &cfg.features.stack)?;
                let tensor = Tensor::new(vec![MAP_SIZE, MAP_SIZE, stack.num_channels()], stack.to_hwc())?;
                let meta = TensorMeta {
                    kind: "feature".into(),
                    layout: Vec::new(),
                    units: vec![String::new(); stack.names.len()],
                    channel_names: stack.names,
                    provenance: BTreeMap::from([
                        ("scene".to_string(), record_ro.id.clone()),
                        ("source".to_string(), s.to_string()),
                        ("reference_receiver".to_string(), r.to_string()),
                    ]),
                };
                let rel = format!("features/{}/src_{s:04}.amap", record_ro.id);
                write_tensor(&ensure_parent(root, &rel)?, &tensor, &meta)?;
                Ok((s, rel))
            })
            .collect::<Result<_>>()?;
        for (s, rel) in written {
            record_tensor(root, record, &source_key("feature", s), &rel)?;
        }
    }
    Ok(StageOutput::default())
}
