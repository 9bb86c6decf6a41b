//! `extract-params`: label-layout parameter values for every pair.

use std::collections::BTreeMap;

use acousmap_core::analysis::ParamExtractor;
use acousmap_core::dataset::{write_tensor, Tensor, TensorMeta};
use acousmap_core::heatmap::{directional_channel_values, omni_channel_values, ChannelKey, TaskMode};
use acousmap_core::RoomImpulseResponse;
use rayon::prelude::*;

use super::ensure_parent;
use crate::error::Result;
use crate::run::{Ctx, StageOutput};
use crate::store::{record_tensor, SceneRirs};

pub(crate) fn meta(kind: &str, layout: &[ChannelKey], provenance: BTreeMap<String, String>) -> TensorMeta {
    TensorMeta {
        kind: kind.into(),
        layout: layout.to_vec(),
        channel_names: layout.iter().map(ChannelKey::label).collect(),
        units: layout.iter().map(|k| k.param.unit().to_string()).collect(),
        provenance,
    }
}

pub(crate) fn channel_values(rir: &RoomImpulseResponse, mode: TaskMode, extractor: &ParamExtractor) -> acousmap_core::Result<Vec<f64>> {
    match mode {
        TaskMode::Omni => Ok(omni_channel_values(&extractor.extract(&rir.omni_f64())?)),
        TaskMode::Directional => directional_channel_values(rir, extractor),
    }
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let mode = ctx.config.task_mode;
    let layout = mode.layout();
    let c = layout.len();
    let mut failed = 0usize;
    for record in ctx.manifest.scenes.iter_mut() {
        let rirs = SceneRirs::open(ctx.root, record)?;
        let extractor = ParamExtractor::new(mode.bands_hz(), rirs.sample_rate())?;
        let n_rx = record.num_receivers;
        let rows: Vec<(usize, usize, Option<Vec<f64>>)> = rirs
            .pairs()
            .into_par_iter()
            .map(|(s, r)| {
                let rir = rirs.rir(s, r)?;
                match channel_values(&rir, mode, &extractor) {
                    Ok(v) => Ok((s, r, Some(v))),
                    Err(e) => {
                        log::debug!("{} pair ({s}, {r}): {e}", record.id);
                        Ok((s, r, None))
                    }
                }
            })
            .collect::<Result<_>>()?;

        // rows follow record.sources; self pairs and failed pairs stay NaN
        let mut data = vec![f32::NAN; record.sources.len() * n_rx * c];
        for (s, r, values) in rows {
            let Some(values) = values else {
                failed += 1;
                continue;
            };
            let si = record.sources.iter().position(|&x| x == s).expect("pair source is a scene source");
            let base = (si * n_rx + r) * c;
            for (k, v) in values.into_iter().enumerate() {
                data[base + k] = v as f32;
            }
        }
        let tensor = Tensor::new(vec![record.sources.len(), n_rx, c], data)?;
        let rel = format!("params/{}.amap", record.id);
        let provenance = BTreeMap::from([
            ("scene".to_string(), record.id.clone()),
            ("axes".to_string(), "source, receiver, channel".to_string()),
        ]);
        write_tensor(&ensure_parent(ctx.root, &rel)?, &tensor, &meta("params", &layout, provenance))?;
        record_tensor(ctx.root, record, "params", &rel)?;
    }
    if failed > 0 {
        log::warn!("extract-params: {failed} pairs could not be analysed and are left undefined");
    }
    Ok(StageOutput::default())
}
