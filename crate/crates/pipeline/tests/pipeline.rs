use std::path::Path;

use acousmap_core::analysis::ParamKind;
use acousmap_core::dataset::{read_heatmap, DatasetManifest, SplitMode};
use acousmap_core::heatmap::TaskMode;
use acousmap_pipeline::{Pipeline, PipelineConfig, PipelineError, Stage};

/// Two small scenes with a coarse receiver grid and short RIRs.
fn mini(seed: u64) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.seed = seed;
    c.scenes.count = 2;
    c.scenes.rooms = (2, 2);
    c.scenes.placement.spacing_m = 0.6;
    c.simulation.tail_duration_s = 1.0;
    c.simulation.max_duration_s = 1.0;
    c.split = None;
    c
}

fn file_bytes(root: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(root.join(rel)).unwrap()
}

#[test]
fn scene_generation_is_deterministic() {
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut hashes = Vec::new();
    for (dir, seed) in [(&a, 3), (&b, 3), (&c, 4)] {
        let mut p = Pipeline::new(dir.path(), mini(seed)).unwrap();
        hashes.push(p.run(Stage::GenScenes, false).unwrap().output_sha256);
    }
    assert_eq!(hashes[0], hashes[1]);
    assert_ne!(hashes[0], hashes[2]);
    assert_eq!(file_bytes(a.path(), "scenes/scene_0001.json"), file_bytes(b.path(), "scenes/scene_0001.json"));
}

#[test]
fn stages_refuse_to_run_without_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(dir.path(), mini(1)).unwrap();
    assert!(matches!(p.run(Stage::Simulate, false), Err(PipelineError::NoManifest(_))));
    p.run(Stage::GenScenes, false).unwrap();
    match p.run(Stage::ExtractParams, false) {
        Err(PipelineError::MissingUpstream { stage, upstream }) => assert_eq!((stage, upstream), ("extract-params", "simulate")),
        other => panic!("{other:?}"),
    }

    // a different seed makes the recorded scenes stale for simulate
    let mut other = Pipeline::new(dir.path(), mini(2)).unwrap();
    assert!(matches!(other.run(Stage::Simulate, false), Err(PipelineError::StaleUpstream { upstream: "gen-scenes", .. })));
}

#[test]
fn golden_loss_matches_its_tensors() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = Pipeline::new(dir.path(), mini(5)).unwrap();
    p.run(Stage::ExportGolden, false).unwrap();
    let loss: acousmap_pipeline::GoldenLoss =
        serde_json::from_slice(&file_bytes(dir.path(), "golden/loss.json")).unwrap();
    let pred = acousmap_core::dataset::read_tensor(&dir.path().join("golden/pred.amap")).unwrap();
    let target = acousmap_core::dataset::read_tensor(&dir.path().join("golden/target.amap")).unwrap();
    let mask = acousmap_core::dataset::read_tensor(&dir.path().join("golden/mask.amap")).unwrap();
    // independent recomputation straight from the HWC buffers
    let c = loss.channels;
    let mut total = 0.0;
    for k in 0..c {
        let (mut sum, mut n) = (0.0f64, 0usize);
        for (p, m) in mask.data().iter().enumerate() {
            if *m > 0.5 {
                sum += (pred.data()[p * c + k] as f64 - target.data()[p * c + k] as f64).abs();
                n += 1;
            }
        }
        total += sum / n as f64;
    }
    assert!((total - loss.loss).abs() < 1e-9, "{total} vs {}", loss.loss);
}

#[test]
fn full_run_resumes_invalidates_and_checks_integrity() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut p = Pipeline::new(root, mini(11)).unwrap();
    let first = p.run_all(false).unwrap();
    assert!(first.iter().all(|o| !o.skipped));

    // every parameter is scored for the input-RIR baseline
    let eval = first.iter().find(|o| o.stage == Stage::Evaluate).unwrap();
    assert_eq!(eval.reports.len(), 5);
    let input = eval.reports.iter().find(|r| r.grouping["model"] == "InputRir").unwrap();
    for kind in ParamKind::ALL {
        let s = input.errors.get(&kind).unwrap_or_else(|| panic!("{kind:?} missing"));
        assert!(s.mean.is_finite() && s.count > 0, "{kind:?}: {s:?}");
    }

    // labels carry the full omni layout
    let m = DatasetManifest::load(root).unwrap();
    let label = m.scenes[0].file(&format!("label/{:04}", m.scenes[0].sources[0])).unwrap();
    let h = read_heatmap(&label.resolve(root)).unwrap();
    assert_eq!(h.num_channels(), TaskMode::Omni.channel_count());
    assert!(m.normalizer.is_some());
    let samples = m.samples(root, acousmap_core::dataset::Split::Test, "feature", "label");
    assert!(samples.is_empty(), "no split means no test samples in the manifest sense");

    // a second run is a no-op with the same manifest
    let hash = p.manifest().unwrap().hash().unwrap();
    let again = p.run_all(false).unwrap();
    assert!(again.iter().all(|o| o.skipped));
    assert_eq!(again[7].reports.len(), 5);
    assert_eq!(p.manifest().unwrap().hash().unwrap(), hash);

    // plots: 2 samples x (label + 5 baselines) x 24 channels, plus the scale file
    p.run(Stage::Plot, false).unwrap();
    let pngs = p.manifest().unwrap().files.keys().filter(|k| k.starts_with("plot/") && *k != "plot/scales").count();
    assert_eq!(pngs, 2 * 6 * 24);

    // new label settings drop everything that read the labels
    let mut cfg = mini(11);
    cfg.labels.sigma_px = 2.5;
    let mut p = Pipeline::new(root, cfg).unwrap();
    let out = p.run(Stage::MakeLabels, false).unwrap();
    assert!(!out.skipped);
    let m = p.manifest().unwrap();
    for gone in ["baseline", "evaluate", "plot"] {
        assert!(!m.stages.contains_key(gone), "{gone} survived");
    }
    assert!(m.stages.contains_key("make-features"));
    assert!(m.files.keys().all(|k| !k.starts_with("plot/") && !k.starts_with("report/")));
    assert!(!root.join("reports/table.txt").exists());
    assert!(matches!(p.run(Stage::Evaluate, false), Err(PipelineError::MissingUpstream { upstream: "baseline", .. })));
    p.run(Stage::Baseline, false).unwrap();

    // a changed label file is caught on read
    let m = p.manifest().unwrap();
    let label = m.scenes[0].file(&format!("label/{:04}", m.scenes[0].sources[0])).unwrap().resolve(root);
    let mut bytes = std::fs::read(&label).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&label, bytes).unwrap();
    assert!(matches!(p.run(Stage::Evaluate, false), Err(PipelineError::StaleUpstream { upstream: "make-labels", .. })));
}

#[test]
fn receiver_split_and_external_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut cfg = mini(21);
    cfg.scenes.count = 1;
    cfg.split = Some(SplitMode::Receiver { train_fraction: 0.7 });
    cfg.baselines.kinds = vec![acousmap_core::baselines::BaselineKind::InputRir];
    let mut p = Pipeline::new(root, cfg.clone()).unwrap();
    p.run_all(false).unwrap();
    let m = p.manifest().unwrap().clone();
    let scene = &m.scenes[0];
    let part = scene.receiver_split.as_ref().unwrap();
    assert_eq!(part.train.len() + part.test.len(), scene.num_receivers);
    for &s in &scene.sources {
        assert!(scene.file(&format!("label_test/{s:04}")).is_some());
    }

    // the baseline's own files, fed back as an external model, score the same
    let copy = root.join("external");
    let src = root.join("baselines/InputRir");
    std::fs::create_dir_all(copy.join(&scene.id)).unwrap();
    for entry in std::fs::read_dir(src.join(&scene.id)).unwrap() {
        let e = entry.unwrap();
        std::fs::copy(e.path(), copy.join(&scene.id).join(e.file_name())).unwrap();
    }
    cfg.evaluate.predictions.insert("copy".into(), copy);
    cfg.evaluate.max_error.insert("copy.C50".into(), 1e-9);
    let mut p = Pipeline::new(root, cfg).unwrap();
    let out = p.run(Stage::Evaluate, false).unwrap();
    let by_model = |name: &str| out.reports.iter().find(|r| r.grouping["model"] == name).unwrap().clone();
    let (a, b) = (by_model("InputRir"), by_model("copy"));
    assert_eq!(a.errors, b.errors);
    assert_eq!(a.grouping["labels"], "label_test");
    assert_eq!(out.violations.len(), 1, "{:?}", out.violations);
}
