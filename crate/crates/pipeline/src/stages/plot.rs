//! `plot`: label and prediction images for a few evaluation samples, one
//! PNG per channel, with one colour scale per channel.

use std::collections::BTreeMap;

use acousmap_core::dataset::{source_key, FileRef, SceneRecord};
use acousmap_core::heatmap::AcousticHeatmap;

use super::baseline::prediction_key;
use super::{ensure_parent, eval_scenes, write_json};
use crate::error::{PipelineError, Result};
use crate::plot::{write_png, ColorScale};
use crate::run::{Ctx, StageOutput};
use crate::store::read_heatmap_verified;

pub const SCALES_FILE: &str = "plots/scales.json";

/// File-name form of a channel label.
fn slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let cfg = ctx.config;
    let root = ctx.root;
    let manifest = &*ctx.manifest;
    let label_key = if manifest.scenes.iter().any(|s| s.receiver_split.is_some()) { "label_test" } else { "label" };
    let samples: Vec<(&SceneRecord, usize)> = eval_scenes(&manifest.scenes, manifest.split.is_some())
        .into_iter()
        .flat_map(|r| r.sources.iter().map(move |&s| (r, s)))
        .take(cfg.plot.max_samples)
        .collect();

    // (sample, model) → heatmap; the label is model "label"
    let mut maps: Vec<(String, String, AcousticHeatmap)> = Vec::new();
    for &(record, s) in &samples {
        let sample = format!("{}_src_{s:04}", record.id);
        maps.push((sample.clone(), "label".into(), read_heatmap_verified(root, record, &source_key(label_key, s), "make-labels")?));
        for kind in &cfg.baselines.kinds {
            let h = read_heatmap_verified(root, record, &prediction_key(kind.name(), s), "baseline")?;
            maps.push((sample.clone(), kind.name().to_string(), h));
        }
    }
    let Some((_, _, first)) = maps.first() else {
        log::warn!("plot: no evaluation samples");
        return Ok(StageOutput::default());
    };
    let layout = first.layout.clone();
    let labels: Vec<String> = layout.iter().map(|k| k.label()).collect();
    let channels: Vec<usize> = if cfg.plot.channels.is_empty() {
        (0..layout.len()).collect()
    } else {
        cfg.plot
            .channels
            .iter()
            .map(|want| {
                labels.iter().position(|l| l == want).ok_or_else(|| {
                    PipelineError::Config(format!("plot channel `{want}` is not one of: {}", labels.join(", ")))
                })
            })
            .collect::<Result<_>>()?
    };

    let mut scales = BTreeMap::new();
    let mut written = Vec::new();
    for &k in &channels {
        let scale = ColorScale::fit(maps.iter().flat_map(|(_, _, h)| h.values[k].as_slice())).unwrap_or(ColorScale { min: 0.0, max: 1.0 });
        scales.insert(labels[k].clone(), scale);
        for (sample, model, h) in &maps {
            let rel = format!("plots/{sample}/{model}/{}.png", slug(&labels[k]));
            write_png(&ensure_parent(root, &rel)?, &h.values[k], &scale)?;
            written.push((format!("plot/{sample}/{model}/{}", slug(&labels[k])), rel));
        }
    }
    write_json(root, SCALES_FILE, &scales)?;
    written.push(("plot/scales".into(), SCALES_FILE.into()));
    for (key, rel) in written {
        ctx.manifest.files.insert(key, FileRef::hash(root, &rel)?);
    }
    Ok(StageOutput::default())
}
