//! Stage bookkeeping.
//!
//! Each stage records two hashes in the manifest: one over everything it
//! read (its config section, the seed, the task mode and the output hashes
//! of its upstream stages) and one over the files it wrote. A stage whose
//! input hash is unchanged and whose files are intact is skipped. After a
//! stage runs, every downstream stage whose input hash moved is dropped
//! together with its files.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use acousmap_core::dataset::{sha256_hex, DatasetManifest, StageRecord, MANIFEST_FILE};
use acousmap_core::eval::EvaluationReport;
use serde_json::{json, Value};

use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::stage::Stage;
use crate::stages;

/// Environment variable holding the worker count; unset or 0 uses all cores.
pub const WORKERS_ENV: &str = "ACOUSMAP_WORKERS";

/// Shared state handed to a stage body.
pub(crate) struct Ctx<'a> {
    pub root: &'a Path,
    pub config: &'a PipelineConfig,
    pub manifest: &'a mut DatasetManifest,
}

/// Extra results of a stage body.
#[derive(Debug, Default)]
pub(crate) struct StageOutput {
    pub reports: Vec<EvaluationReport>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub stage: Stage,
    /// True when the recorded outputs were current and nothing ran.
    pub skipped: bool,
    pub input_sha256: String,
    pub output_sha256: String,
    pub manifest_sha256: String,
    pub elapsed: Duration,
    /// Evaluation reports, for `evaluate`.
    pub reports: Vec<EvaluationReport>,
    /// Broken `max_error` bounds, for `evaluate`.
    pub violations: Vec<String>,
}

pub struct Pipeline {
    root: PathBuf,
    config: PipelineConfig,
    manifest: Option<DatasetManifest>,
    pool: rayon::ThreadPool,
}

fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| PipelineError::Config(format!("{WORKERS_ENV}={v} is not a count"))),
        Err(_) => Ok(0),
    }
}

impl Pipeline {
    /// Opens `root`, loading its manifest when one exists.
    pub fn new(root: impl Into<PathBuf>, config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let manifest = if root.join(MANIFEST_FILE).exists() { Some(DatasetManifest::load(&root)?) } else { None };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_count()?)
            .build()
            .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
        Ok(Self { root, config, manifest, pool })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn manifest(&self) -> Option<&DatasetManifest> {
        self.manifest.as_ref()
    }

    /// The stages `run_all` executes, in order.
    pub fn default_stages() -> Vec<Stage> {
        vec![
            Stage::GenScenes,
            Stage::Split,
            Stage::Simulate,
            Stage::ExtractParams,
            Stage::MakeLabels,
            Stage::MakeFeatures,
            Stage::Baseline,
            Stage::Evaluate,
        ]
    }

    pub fn run_all(&mut self, force: bool) -> Result<Vec<StageOutcome>> {
        Self::default_stages().into_iter().map(|s| self.run(s, force)).collect()
    }

    pub fn run(&mut self, stage: Stage, force: bool) -> Result<StageOutcome> {
        let start = Instant::now();
        if self.manifest.is_none() {
            if stage != Stage::GenScenes && stage != Stage::ExportGolden {
                return Err(PipelineError::NoManifest(self.root.clone()));
            }
            self.manifest = Some(DatasetManifest::new(self.config.seed, self.config.task_mode, String::new()));
        }
        let manifest = self.manifest.as_mut().expect("manifest present");
        manifest.config_sha256 = sha256_hex(&serde_json::to_vec(&self.config.canonical_json()?)?);

        for &up in stage.upstream() {
            if !manifest.stages.contains_key(up.name()) {
                return Err(PipelineError::MissingUpstream { stage: stage.name(), upstream: up.name() });
            }
            if !is_current(&self.root, &self.config, manifest, up)? {
                return Err(PipelineError::StaleUpstream { stage: stage.name(), upstream: up.name() });
            }
        }

        let input = input_hash(&self.config, manifest, stage)?;
        // extra prediction sets live outside the manifest, so they are always rescored
        let external = stage == Stage::Evaluate && !self.config.evaluate.predictions.is_empty();
        if !force && !external && is_current(&self.root, &self.config, manifest, stage)? {
            let rec = &manifest.stages[stage.name()];
            log::info!("{stage}: up to date");
            let mut outcome = StageOutcome {
                stage,
                skipped: true,
                input_sha256: input,
                output_sha256: rec.output_sha256.clone(),
                manifest_sha256: manifest.hash()?,
                elapsed: start.elapsed(),
                reports: Vec::new(),
                violations: Vec::new(),
            };
            if stage == Stage::Evaluate {
                let out = stages::evaluate::reload(&self.root, &self.config, manifest)?;
                outcome.reports = out.reports;
                outcome.violations = out.violations;
            }
            return Ok(outcome);
        }

        log::info!("{stage}: running");
        manifest.stages.remove(stage.name());
        // gen-scenes carries unchanged scenes over itself
        if stage != Stage::GenScenes {
            clear_outputs(&self.root, manifest, stage);
        }
        let root = self.root.clone();
        let config = &self.config;
        let output = self.pool.install(|| {
            let mut ctx = Ctx { root: &root, config, manifest };
            stages::run(stage, &mut ctx)
        });
        // keep the record consistent even when the stage body failed halfway
        let output = match output {
            Ok(o) => o,
            Err(e) => {
                manifest.save(&self.root)?;
                return Err(e);
            }
        };
        let output_sha256 = output_hash(manifest, stage)?;
        manifest
            .stages
            .insert(stage.name().to_string(), StageRecord { input_sha256: input.clone(), output_sha256: output_sha256.clone() });
        invalidate_downstream(&self.root, &self.config, manifest, stage)?;
        manifest.save(&self.root)?;
        let elapsed = start.elapsed();
        log::info!("{stage}: done in {:.1} s", elapsed.as_secs_f64());
        Ok(StageOutcome {
            stage,
            skipped: false,
            input_sha256: input,
            output_sha256,
            manifest_sha256: manifest.hash()?,
            elapsed,
            reports: output.reports,
            violations: output.violations,
        })
    }
}

/// Config section each stage reads.
fn config_section(config: &PipelineConfig, stage: Stage) -> Result<Value> {
    Ok(match stage {
        Stage::GenScenes => serde_json::to_value(&config.scenes)?,
        Stage::Split => serde_json::to_value(config.split)?,
        Stage::Simulate => serde_json::to_value(&config.simulation)?,
        Stage::MakeLabels => serde_json::to_value(&config.labels)?,
        Stage::MakeFeatures => serde_json::to_value(&config.features)?,
        Stage::Baseline => serde_json::to_value(&config.baselines)?,
        Stage::Evaluate => serde_json::to_value(&config.evaluate)?,
        Stage::Plot => serde_json::to_value(&config.plot)?,
        Stage::ExtractParams | Stage::ExportGolden => Value::Null,
    })
}

fn input_hash(config: &PipelineConfig, manifest: &DatasetManifest, stage: Stage) -> Result<String> {
    let recorded = |s: Stage| manifest.stages.get(s.name()).map(|r| r.output_sha256.clone());
    let upstream: serde_json::Map<String, Value> = stage
        .upstream()
        .iter()
        .map(|&u| (u.name().to_string(), json!(recorded(u).unwrap_or_else(|| "missing".into()))))
        .collect();
    let optional: serde_json::Map<String, Value> = stage
        .optional_upstream()
        .iter()
        .map(|&u| (u.name().to_string(), json!(recorded(u).unwrap_or_else(|| "none".into()))))
        .collect();
    let doc = json!({
        "stage": stage.name(),
        "seed": config.seed,
        "task_mode": config.task_mode,
        "config": config_section(config, stage)?,
        "upstream": upstream,
        "optional": optional,
    });
    Ok(sha256_hex(&serde_json::to_vec(&doc)?))
}

fn owns(stage: Stage, key: &str) -> bool {
    stage.file_prefixes().iter().any(|p| key.starts_with(p))
}

/// Hash over the stage's recorded files (and split assignments or the
/// normalizer where the stage owns them).
fn output_hash(manifest: &DatasetManifest, stage: Stage) -> Result<String> {
    let mut entries: Vec<(String, String, String)> = Vec::new();
    for s in &manifest.scenes {
        for (k, f) in s.files.iter().filter(|(k, _)| owns(stage, k)) {
            entries.push((s.id.clone(), k.clone(), f.sha256.clone()));
        }
    }
    for (k, f) in manifest.files.iter().filter(|(k, _)| owns(stage, k)) {
        entries.push((String::new(), k.clone(), f.sha256.clone()));
    }
    let extra = match stage {
        Stage::Split => json!({
            "split": manifest.split,
            "assignments": manifest.scenes.iter().map(|s| json!([s.id, s.split, s.receiver_split])).collect::<Vec<_>>(),
        }),
        Stage::MakeLabels => json!(manifest.normalizer.as_ref().map(|n| &n.sha256)),
        _ => Value::Null,
    };
    Ok(sha256_hex(&serde_json::to_vec(&json!({ "files": entries, "extra": extra }))?))
}

/// Recorded, computed from the current inputs, and with intact files.
fn is_current(root: &Path, config: &PipelineConfig, manifest: &DatasetManifest, stage: Stage) -> Result<bool> {
    let Some(rec) = manifest.stages.get(stage.name()) else {
        return Ok(false);
    };
    if rec.input_sha256 != input_hash(config, manifest, stage)? || rec.output_sha256 != output_hash(manifest, stage)? {
        return Ok(false);
    }
    let files = manifest
        .scenes
        .iter()
        .flat_map(|s| s.files.iter())
        .chain(manifest.files.iter())
        .filter(|(k, _)| owns(stage, k))
        .map(|(_, f)| f)
        .chain(if stage == Stage::MakeLabels { manifest.normalizer.as_ref() } else { None });
    for f in files {
        if !f.verify(root)? {
            log::warn!("{stage}: {} changed on disk", f.path);
            return Ok(false);
        }
    }
    Ok(true)
}

/// Forgets and deletes whatever `stage` wrote before.
fn clear_outputs(root: &Path, manifest: &mut DatasetManifest, stage: Stage) {
    let doomed: Vec<PathBuf> = manifest
        .scenes
        .iter()
        .flat_map(|s| s.files.iter())
        .chain(manifest.files.iter())
        .filter(|(k, _)| owns(stage, k))
        .map(|(_, f)| f.resolve(root))
        .collect();
    for p in doomed {
        // a file that is already gone is fine
        let _ = std::fs::remove_file(p);
    }
    for prefix in stage.file_prefixes() {
        manifest.remove_files(prefix);
    }
    match stage {
        Stage::Split => {
            manifest.split = None;
            for s in &mut manifest.scenes {
                s.split = None;
                s.receiver_split = None;
            }
        }
        Stage::MakeLabels => {
            if let Some(n) = manifest.normalizer.take() {
                let _ = std::fs::remove_file(n.resolve(root));
            }
        }
        _ => {}
    }
}

fn invalidate_downstream(root: &Path, config: &PipelineConfig, manifest: &mut DatasetManifest, changed: Stage) -> Result<()> {
    for d in Stage::ALL.into_iter().filter(|d| d.depends_on(changed)) {
        let Some(rec) = manifest.stages.get(d.name()) else {
            continue;
        };
        if rec.input_sha256 != input_hash(config, manifest, d)? {
            log::info!("{d}: inputs changed, dropping its outputs");
            manifest.stages.remove(d.name());
            clear_outputs(root, manifest, d);
        }
    }
    Ok(())
}
