//! `evaluate`: scores every prediction set against the labels of the
//! evaluation scenes.

use std::collections::BTreeMap;

use acousmap_core::analysis::ParamKind;
use acousmap_core::dataset::{read_heatmap, source_key, DatasetManifest, FileRef, SceneRecord};
use acousmap_core::eval::{evaluate_sample, report_table, EvaluationReport, ReportBuilder, SampleMetrics};
use acousmap_core::heatmap::{AcousticHeatmap, ParamNormalizer};
use acousmap_core::Error as CoreError;
use rayon::prelude::*;

use super::baseline::prediction_key;
use super::{ensure_parent, eval_scenes, write_json};
use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::run::{Ctx, StageOutput};
use crate::store::{read_heatmap_verified, read_json, read_verified};

pub const TABLE_FILE: &str = "reports/table.txt";

enum Source<'a> {
    Baseline(&'a str),
    External(&'a std::path::Path),
}

fn label_key(manifest: &DatasetManifest) -> &'static str {
    if manifest.scenes.iter().any(|s| s.receiver_split.is_some()) { "label_test" } else { "label" }
}

fn load_prediction(root: &std::path::Path, record: &SceneRecord, source: usize, from: &Source<'_>) -> Result<AcousticHeatmap> {
    match from {
        Source::Baseline(kind) => read_heatmap_verified(root, record, &prediction_key(kind, source), "baseline"),
        Source::External(dir) => {
            let path = dir.join(&record.id).join(format!("src_{source:04}.amap"));
            read_heatmap(&path).map_err(|e| PipelineError::Invalid(format!("prediction {}: {e}", path.display())))
        }
    }
}

/// Bounds broken by the reports. Keys are `PARAM` (every model) or
/// `MODEL.PARAM`.
pub fn check_bounds(reports: &[EvaluationReport], bounds: &BTreeMap<String, f64>) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (key, &limit) in bounds {
        let (model, param) = match key.rsplit_once('.') {
            Some((m, p)) => (Some(m), p),
            None => (None, key.as_str()),
        };
        let kind = ParamKind::parse(param).ok_or_else(|| PipelineError::Config(format!("max_error key `{key}`: unknown parameter")))?;
        let matching: Vec<&EvaluationReport> = reports
            .iter()
            .filter(|r| model.is_none_or(|m| r.grouping.get("model").map(String::as_str) == Some(m)))
            .collect();
        if matching.is_empty() {
            return Err(PipelineError::Config(format!("max_error key `{key}` matches no evaluated model")));
        }
        for r in matching {
            let name = r.grouping.get("model").map(String::as_str).unwrap_or("-");
            match r.errors.get(&kind) {
                Some(s) if s.mean <= limit => {}
                Some(s) => out.push(format!("{name}: mean {} error {:.4} exceeds {limit}", kind.name(), s.mean)),
                None => out.push(format!("{name}: no {} error to compare with {limit}", kind.name())),
            }
        }
    }
    Ok(out)
}

pub(crate) fn run(ctx: &mut Ctx<'_>) -> Result<StageOutput> {
    let cfg: &PipelineConfig = ctx.config;
    let root = ctx.root;
    let (reports, n_samples) = score(root, cfg, ctx.manifest)?;
    for r in &reports {
        let name = &r.grouping["model"];
        let rel = format!("reports/{name}.json");
        write_json(root, &rel, r)?;
        ctx.manifest.files.insert(format!("report/{name}"), FileRef::hash(root, &rel)?);
    }
    let table = report_table(&reports);
    std::fs::write(ensure_parent(root, TABLE_FILE)?, &table)?;
    ctx.manifest.files.insert("report/table".into(), FileRef::hash(root, TABLE_FILE)?);
    log::info!("evaluate: {n_samples} samples\n{table}");
    let violations = check_bounds(&reports, &cfg.evaluate.max_error)?;
    Ok(StageOutput { reports, violations })
}

/// One report per model, in config order, and the number of samples.
fn score(root: &std::path::Path, cfg: &PipelineConfig, manifest: &DatasetManifest) -> Result<(Vec<EvaluationReport>, usize)> {
    let normalizer: Option<ParamNormalizer> = manifest.normalizer.as_ref().map(|f| read_json(root, f)).transpose()?;
    let label_key = label_key(manifest);
    let scenes = eval_scenes(&manifest.scenes, manifest.split.is_some());
    let mut models: Vec<(String, Source<'_>)> = cfg.baselines.kinds.iter().map(|k| (k.name().to_string(), Source::Baseline(k.name()))).collect();
    for (name, dir) in &cfg.evaluate.predictions {
        if models.iter().any(|(m, _)| m == name) {
            return Err(PipelineError::Config(format!("prediction set `{name}` shadows a baseline")));
        }
        models.push((name.clone(), Source::External(dir)));
    }

    let samples: Vec<(&SceneRecord, usize)> = scenes.iter().flat_map(|r| r.sources.iter().map(move |&s| (*r, s))).collect();
    let scored: Vec<Vec<Option<SampleMetrics>>> = samples
        .par_iter()
        .map(|&(record, s)| {
            let target = read_heatmap_verified(root, record, &source_key(label_key, s), "make-labels")?;
            let key = format!("{}/{s:04}", record.id);
            models
                .iter()
                .map(|(_, from)| {
                    let pred = load_prediction(root, record, s, from)?;
                    match evaluate_sample(&key, &pred, &target, normalizer.as_ref(), &cfg.evaluate.metrics) {
                        Ok(m) => Ok(Some(m)),
                        Err(CoreError::EmptyMask) => Ok(None),
                        Err(e) => Err(e.into()),
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(models.len());
    for (m, (name, _)) in models.iter().enumerate() {
        let mut builder = ReportBuilder::new();
        for row in &scored {
            match &row[m] {
                Some(metrics) => builder.add_metrics(metrics.clone()),
                None => builder.add_excluded(),
            }
        }
        let grouping = BTreeMap::from([
            ("model".to_string(), name.clone()),
            ("task_mode".to_string(), format!("{:?}", cfg.task_mode).to_lowercase()),
            ("scenes".to_string(), if manifest.split.is_some() { "test" } else { "all" }.to_string()),
            ("labels".to_string(), label_key.to_string()),
        ]);
        reports.push(builder.finish(grouping, &cfg.evaluate.metrics));
    }
    Ok((reports, samples.len()))
}

/// Reports recorded by an earlier run, for a skipped stage.
pub(crate) fn reload(root: &std::path::Path, config: &PipelineConfig, manifest: &DatasetManifest) -> Result<StageOutput> {
    let order: Vec<String> = config.baselines.kinds.iter().map(|k| k.name().to_string()).chain(config.evaluate.predictions.keys().cloned()).collect();
    let mut reports = Vec::new();
    for (key, file) in manifest.files.iter().filter(|(k, _)| k.starts_with("report/") && *k != "report/table") {
        let report: EvaluationReport = serde_json::from_slice(&read_verified(root, file)?)
            .map_err(|e| PipelineError::Invalid(format!("{key}: {e}")))?;
        reports.push(report);
    }
    reports.sort_by_key(|r| order.iter().position(|m| Some(m) == r.grouping.get("model")).unwrap_or(usize::MAX));
    let violations = check_bounds(&reports, &config.evaluate.max_error)?;
    Ok(StageOutput { reports, violations })
}
